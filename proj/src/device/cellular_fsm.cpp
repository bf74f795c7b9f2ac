#include "device/cellular_fsm.hpp"

#include <fmt/format.h>

#include "common/error.hpp"

namespace fieldcam::device {

std::string_view to_string(CellState s) {
  switch (s) {
    case CellState::wait_rdy: return "wait_rdy";
    case CellState::send_CSQ: return "send_CSQ";
    case CellState::wait_CSQ: return "wait_CSQ";
    case CellState::do_CSQ: return "do_CSQ";
    case CellState::send_QMTOPEN: return "send_QMTOPEN";
    case CellState::wait_QMTOPEN: return "wait_QMTOPEN";
    case CellState::do_QMTOPEN: return "do_QMTOPEN";
    case CellState::send_QMTCONN_once: return "send_QMTCONN_once";
    case CellState::poll_QMTCONN: return "poll_QMTCONN";
    case CellState::wait_QMTCONN: return "wait_QMTCONN";
    case CellState::do_QMTCONN: return "do_QMTCONN";
    case CellState::pub_header: return "pub_header";
    case CellState::pub_segment: return "pub_segment";
    case CellState::wait_prompt: return "wait_prompt";
    case CellState::wait_QMTPUB: return "wait_QMTPUB";
    case CellState::cellular_done: return "cellular_done";
    case CellState::cellular_failed: return "cellular_failed";
  }
  return "?";
}

Duration TimingParams::serial_time(std::size_t bytes) const {
  // bytes * 8 bits / (baud * 8/9) seconds, rounded to the microsecond.
  const auto num = static_cast<std::uint64_t>(bytes) * 9u * 1'000'000u;
  return Duration(static_cast<std::int64_t>((num + baud / 2) / baud));
}

void TimingParams::validate() const {
  for (const Duration d : {rdy_wait, csq_wait, qmtopen_wait, qmtconn_wait, qmtconn_query_wait,
                           qmtpub_wait, prompt_wait, qlts_wait, loop_tick, max_duration})
    if (d <= 0us) fail(ErrorCode::InvalidArgument, "timing parameters must be positive");
  if (baud == 0) fail(ErrorCode::InvalidArgument, "baud must be positive");
}

CellularFsm::CellularFsm(FsmConfig config, TimingParams timing, const VirtualSd& sd, FsmObserver observer)
    : config_(std::move(config)), timing_(timing), sd_(sd), observer_(std::move(observer)) {
  timing_.validate();
  if (config_.qos < 0 || config_.qos > 2) fail(ErrorCode::InvalidArgument, "qos must be 0, 1 or 2");
  if (config_.segment_size == 0 || config_.segment_size > pipeline::kModemPublishLimit)
    fail(ErrorCode::ExceedsModemLimit, "segment size must be in 1..1548");
  reset(SimTime{0});
}

void CellularFsm::reset(SimTime now) {
  state_ = CellState::wait_rdy;
  flags_ = 0;
  wait_started_ = now;
  wait_budget_ = timing_.rdy_wait;
  busy_until_ = now;
  rx_.clear();
  cursor_ = 0;
  plan_.reset();
  pending_segment_ = -1;
  polled_ = false;
  qlts_sent_ = false;
  open_retries_ = 0;
  conn_retries_ = 0;
  msgid_ = 0;
  failure_.clear();
  qlts_.clear();
}

bool CellularFsm::finished() const {
  return state_ == CellState::cellular_failed ||
         (state_ == CellState::cellular_done && succeeded());
}

void CellularFsm::go(CellState next, SimTime now) {
  if (next == state_) return;
  const CellState from = std::exchange(state_, next);
  if (observer_.on_state) observer_.on_state(from, next, now);
}

std::string CellularFsm::send(std::string bytes, Duration budget, CellState next, SimTime now) {
  rx_.clear();
  wait_started_ = now + timing_.serial_time(bytes.size());
  busy_until_ = wait_started_;
  wait_budget_ = budget;
  go(next, now);
  return bytes;
}

void CellularFsm::finish_wait(SimTime now) {
  if (observer_.on_wait_done) observer_.on_wait_done(state_, wait_started_, now);
}

void CellularFsm::fail_with(std::string why, SimTime now) {
  failure_ = std::move(why);
  go(CellState::cellular_failed, now);
}

std::string CellularFsm::publish_command() const {
  return fmt::format("AT+QMTPUB={},{},{},0,\"{}\"\r", config_.connect_id, msgid_, config_.qos,
                     config_.topic);
}

std::string CellularFsm::step(std::string_view serial_in, SimTime now) {
  rx_ += serial_in;
  if (finished() || now < busy_until_) return {};

  switch (state_) {
    case CellState::wait_rdy:
      if (waited(now) && saw("RDY")) {
        finish_wait(now);
        go(CellState::send_CSQ, now);
      }
      return {};

    case CellState::send_CSQ:
      return send("AT+CSQ\r", timing_.csq_wait, CellState::wait_CSQ, now);

    case CellState::wait_CSQ:
      if (waited(now)) {
        finish_wait(now);
        go(CellState::do_CSQ, now);
      }
      return {};

    case CellState::do_CSQ:
      go(saw("+CSQ:") && !saw("+CSQ: 99,99") ? CellState::send_QMTOPEN : CellState::send_CSQ, now);
      return {};

    case CellState::send_QMTOPEN:
      return send(fmt::format("AT+QMTOPEN={},\"{}\",{}\r", config_.connect_id, config_.host, config_.port),
                  timing_.qmtopen_wait, CellState::wait_QMTOPEN, now);

    case CellState::wait_QMTOPEN:
      if (waited(now)) {
        finish_wait(now);
        go(CellState::do_QMTOPEN, now);
      }
      return {};

    case CellState::do_QMTOPEN: {
      const auto prefix = fmt::format("+QMTOPEN: {},", config_.connect_id);
      if (saw(prefix) && !saw(prefix + "3")) {
        go(CellState::send_QMTCONN_once, now);
      } else if (++open_retries_ > config_.max_open_retries) {
        fail_with("QMTOPEN retries exhausted", now);
      } else {
        go(CellState::send_QMTOPEN, now);
      }
      return {};
    }

    case CellState::send_QMTCONN_once:
      polled_ = false;
      if ((flags_ & flags::kQmtconnSent) == 0) {
        flags_ |= flags::kQmtconnSent;
        return send(fmt::format("AT+QMTCONN={},\"{}\"\r", config_.connect_id, config_.client_id),
                    timing_.qmtconn_wait, CellState::wait_QMTCONN, now);
      }
      // Already requested: give the broker another wait before re-polling.
      rx_.clear();
      wait_started_ = now;
      wait_budget_ = timing_.qmtconn_wait;
      go(CellState::wait_QMTCONN, now);
      return {};

    case CellState::poll_QMTCONN:
      polled_ = true;
      return send("AT+QMTCONN?\r", timing_.qmtconn_query_wait, CellState::wait_QMTCONN, now);

    case CellState::wait_QMTCONN:
      if (waited(now)) {
        finish_wait(now);
        go(CellState::do_QMTCONN, now);
      }
      return {};

    case CellState::do_QMTCONN:
      if (!polled_) {
        go(CellState::poll_QMTCONN, now);
      } else if (saw(fmt::format("+QMTCONN: {},3", config_.connect_id))) {
        go(CellState::pub_header, now);
      } else if (++conn_retries_ > config_.max_conn_retries) {
        fail_with("QMTCONN status retries exhausted", now);
      } else {
        go(CellState::send_QMTCONN_once, now);
      }
      return {};

    case CellState::pub_header:
      try {
        plan_ = pipeline::plan_segments(sd_.size(config_.file), config_.segment_size);
      } catch (const Error& e) {
        fail_with(e.what(), now);
        return {};
      }
      pending_segment_ = -1;
      msgid_ = config_.qos == 0 ? 0 : msgid_ % 65535 + 1;
      return send(publish_command(), timing_.prompt_wait, CellState::wait_prompt, now);

    case CellState::pub_segment:
      pending_segment_ = static_cast<int>(cursor_);
      msgid_ = config_.qos == 0 ? 0 : msgid_ % 65535 + 1;
      return send(publish_command(), timing_.prompt_wait, CellState::wait_prompt, now);

    case CellState::wait_prompt: {
      if (!saw(">")) {
        if (waited(now)) fail_with("no data prompt from modem", now);
        return {};
      }
      finish_wait(now);
      std::string payload =
          pending_segment_ < 0
              ? pipeline::render_header(*plan_)
              : fieldcam::to_string(sd_.read_window(config_.file, cursor_ * plan_->segment_size,
                                          plan_->segment_length(cursor_)));
      if (observer_.on_publish) observer_.on_publish(pending_segment_, payload.size(), now);
      payload += "\x1A\r";
      return send(std::move(payload), timing_.qmtpub_wait, CellState::wait_QMTPUB, now);
    }

    case CellState::wait_QMTPUB:
      if (!waited(now)) return {};
      finish_wait(now);
      if (!saw(fmt::format("+QMTPUB: {},{},0", config_.connect_id, msgid_))) {
        fail_with(pending_segment_ < 0 ? "header publish failed"
                                        : fmt::format("segment {} publish failed", pending_segment_),
                  now);
      } else if (pending_segment_ < 0) {
        cursor_ = 0;
        go(CellState::pub_segment, now);
      } else if (++cursor_ == plan_->segment_count) {
        go(CellState::cellular_done, now);
      } else {
        go(CellState::pub_segment, now);
      }
      return {};

    case CellState::cellular_done:
      if (!qlts_sent_) {
        qlts_sent_ = true;
        return send("AT+QLTS=2\r", timing_.qlts_wait, CellState::cellular_done, now);
      }
      if (waited(now)) {
        finish_wait(now);
        if (const auto at = rx_.find("+QLTS: "); at != std::string::npos)
          qlts_ = rx_.substr(at, rx_.find('\r', at) - at);
        flags_ |= flags::kTransferComplete;
      }
      return {};

    case CellState::cellular_failed:
      return {};
  }
  return {};
}

}  // namespace fieldcam::device
