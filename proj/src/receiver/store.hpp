#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fieldcam::receiver {

enum class RecordStatus { Receiving, Stored, Decoded, Aborted };

std::string_view to_string(RecordStatus s);
std::optional<RecordStatus> parse_status(std::string_view s);

struct TransmissionRecord {
  std::uint64_t id = 0;
  std::int64_t received_at_ms = 0;
  std::size_t encoded_size = 0;
  std::string encoded_path;
  std::string decoded_path;  // set only once decoded
  RecordStatus status = RecordStatus::Receiving;

  bool operator==(const TransmissionRecord&) const = default;
};

// Flat-file record store. Every change appends a full snapshot of the record
// to index.jsonl; on load the last snapshot per id wins.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path dir);

  TransmissionRecord& create(std::int64_t received_at_ms);
  void save(const TransmissionRecord& record);

  const TransmissionRecord* find(std::uint64_t id) const;
  std::vector<TransmissionRecord> list() const;
  const TransmissionRecord* latest_decoded() const;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file_for(std::uint64_t id, std::string_view stage) const;

 private:
  std::filesystem::path dir_;
  std::map<std::uint64_t, TransmissionRecord> records_;
  std::uint64_t next_id_ = 1;
};

}  // namespace fieldcam::receiver
