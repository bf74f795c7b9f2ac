#include "receiver/store.hpp"

#include <fstream>
#include "json.hpp"

#include "common/error.hpp"

namespace fieldcam::receiver {

namespace {

constexpr const char* kIndex = "index.jsonl";

nlohmann::json to_json(const TransmissionRecord& r) {
  return {{"id", r.id},
          {"received_at_ms", r.received_at_ms},
          {"encoded_size", r.encoded_size},
          {"encoded_path", r.encoded_path},
          {"decoded_path", r.decoded_path},
          {"status", to_string(r.status)}};
}

}  // namespace

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::Receiving: return "receiving";
    case RecordStatus::Stored: return "stored";
    case RecordStatus::Decoded: return "decoded";
    case RecordStatus::Aborted: return "aborted";
  }
  return "?";
}

std::optional<RecordStatus> parse_status(std::string_view s) {
  for (auto st : {RecordStatus::Receiving, RecordStatus::Stored, RecordStatus::Decoded, RecordStatus::Aborted})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

RecordStore::RecordStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::Io, "cannot create storage directory " + dir_.string());
  std::ifstream in(dir_ / kIndex);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TransmissionRecord r;
      r.id = j.at("id").get<std::uint64_t>();
      r.received_at_ms = j.at("received_at_ms").get<std::int64_t>();
      r.encoded_size = j.at("encoded_size").get<std::size_t>();
      r.encoded_path = j.at("encoded_path").get<std::string>();
      r.decoded_path = j.value("decoded_path", "");
      const auto st = parse_status(j.at("status").get<std::string>());
      if (!st) throw std::runtime_error("bad status");
      r.status = *st;
      // A transfer cut short by a restart never completes.
      if (r.status == RecordStatus::Receiving) r.status = RecordStatus::Aborted;
      next_id_ = std::max(next_id_, r.id + 1);
      records_[r.id] = std::move(r);
    } catch (const std::exception& e) {
      fail(ErrorCode::Io, "corrupt index line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::filesystem::path RecordStore::file_for(std::uint64_t id, std::string_view stage) const {
  return dir_ / (std::to_string(id) + "_" + std::string(stage));
}

TransmissionRecord& RecordStore::create(std::int64_t received_at_ms) {
  TransmissionRecord r;
  r.id = next_id_++;
  r.received_at_ms = received_at_ms;
  auto& slot = records_[r.id] = std::move(r);
  save(slot);
  return slot;
}

void RecordStore::save(const TransmissionRecord& record) {
  records_[record.id] = record;
  std::ofstream out(dir_ / kIndex, std::ios::app);
  if (!out) fail(ErrorCode::Io, "cannot append to the record index");
  out << to_json(record).dump() << '\n';
}

const TransmissionRecord* RecordStore::find(std::uint64_t id) const {
  const auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<TransmissionRecord> RecordStore::list() const {
  std::vector<TransmissionRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

const TransmissionRecord* RecordStore::latest_decoded() const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it)
    if (it->second.status == RecordStatus::Decoded) return &it->second;
  return nullptr;
}

}  // namespace fieldcam::receiver
