#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include "common/bytes.hpp"
#include "receiver/store.hpp"

namespace fieldcam::receiver {

enum class Phase { AwaitingHeader, Receiving };

// Transfer progress between publishes. Reset after every completed or
// aborted transfer.
struct ReassemblyState {
  std::size_t expected_segments = 0;
  std::size_t segment_size = 0;
  std::size_t last_segment_size = 0;
  std::size_t current_segment = 0;
  std::optional<std::string> sink;  // encoded file being written
  Phase phase = Phase::AwaitingHeader;
  std::optional<std::uint64_t> record_id;

  bool operator==(const ReassemblyState&) const = default;
};

enum class MessageOutcome { Ignored, HeaderAccepted, SegmentAppended, Completed, Aborted };

struct MessageResult {
  MessageOutcome outcome = MessageOutcome::Ignored;
  std::optional<std::uint64_t> record_id;
  // A header that interrupted a transfer aborts that record first.
  std::optional<std::uint64_t> aborted_id;
};

// Strips trailing ASCII whitespace and NULs.
std::string_view strip_trailing(std::string_view s);

// Rebuilds the encoded file from a header publish followed by its segments.
class Reassembler {
 public:
  using Clock = std::function<std::int64_t()>;

  Reassembler(RecordStore& store, Clock clock);
  ~Reassembler();

  MessageResult on_message(ByteView payload);
  const ReassemblyState& state() const { return state_; }

 private:
  bool try_start(ByteView payload, MessageResult& result);
  void abort_current(MessageResult& result);
  void reset();

  RecordStore& store_;
  Clock clock_;
  ReassemblyState state_;
  std::ofstream sink_;
  std::size_t written_ = 0;
};

}  // namespace fieldcam::receiver
