#include "receiver/reassembly.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "pipeline/pipeline.hpp"

namespace fieldcam::receiver {

namespace {

// Headers are short and always carry commas; Base64 segments never do.
bool could_be_header(ByteView payload) {
  return payload.size() <= 32 && std::find(payload.begin(), payload.end(), ',') != payload.end();
}

}  // namespace

std::string_view strip_trailing(std::string_view s) {
  while (!s.empty()) {
    const char c = s.back();
    if (c != '\0' && c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '\v' && c != '\f') break;
    s.remove_suffix(1);
  }
  return s;
}

Reassembler::Reassembler(RecordStore& store, Clock clock) : store_(store), clock_(std::move(clock)) {}

Reassembler::~Reassembler() {
  if (state_.phase == Phase::Receiving) {
    MessageResult ignored;
    abort_current(ignored);
  }
}

void Reassembler::reset() {
  if (sink_.is_open()) sink_.close();
  sink_.clear();
  written_ = 0;
  state_ = ReassemblyState{};
}

void Reassembler::abort_current(MessageResult& result) {
  if (state_.record_id) {
    if (const auto* rec = store_.find(*state_.record_id)) {
      TransmissionRecord r = *rec;
      r.status = RecordStatus::Aborted;
      r.encoded_size = written_;
      store_.save(r);
    }
    result.aborted_id = state_.record_id;
  }
  reset();
}

bool Reassembler::try_start(ByteView payload, MessageResult& result) {
  pipeline::SegmentPlan plan;
  try {
    plan = pipeline::parse_header(strip_trailing(fieldcam::to_string(payload)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedHeader) return false;
    throw;
  }
  TransmissionRecord& rec = store_.create(clock_());
  const auto path = store_.file_for(rec.id, pipeline::kEncodedFile);
  rec.encoded_path = path.string();
  store_.save(rec);

  sink_.open(path, std::ios::binary | std::ios::trunc);
  if (!sink_) fail(ErrorCode::Io, "cannot open " + path.string());
  state_.expected_segments = plan.segment_count;
  state_.segment_size = plan.segment_size;
  state_.last_segment_size = plan.last_segment_size;
  state_.current_segment = 0;
  state_.sink = path.string();
  state_.phase = Phase::Receiving;
  state_.record_id = rec.id;
  result.outcome = MessageOutcome::HeaderAccepted;
  result.record_id = rec.id;
  return true;
}

MessageResult Reassembler::on_message(ByteView payload) {
  MessageResult result;
  if (state_.phase == Phase::AwaitingHeader) {
    try_start(payload, result);
    return result;
  }

  if (could_be_header(payload)) {
    try {
      (void)pipeline::parse_header(strip_trailing(fieldcam::to_string(payload)));
      abort_current(result);
      try_start(payload, result);
      return result;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedHeader) throw;
    }
  }

  result.record_id = state_.record_id;
  const bool last = state_.current_segment + 1 == state_.expected_segments;
  const std::size_t expected = last ? state_.last_segment_size : state_.segment_size;
  if (payload.size() != expected) {
    abort_current(result);
    result.outcome = MessageOutcome::Aborted;
    return result;
  }
  sink_.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  written_ += payload.size();
  ++state_.current_segment;
  if (!last) {
    result.outcome = MessageOutcome::SegmentAppended;
    return result;
  }

  sink_.close();
  const bool ok = !sink_.fail();
  TransmissionRecord r = *store_.find(*state_.record_id);
  r.encoded_size = written_;
  r.status = ok ? RecordStatus::Stored : RecordStatus::Aborted;
  store_.save(r);
  reset();
  result.outcome = ok ? MessageOutcome::Completed : MessageOutcome::Aborted;
  return result;
}

}  // namespace fieldcam::receiver
