#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "common/sim_time.hpp"
#include "device/storage.hpp"
#include "pipeline/pipeline.hpp"

namespace fieldcam::device {

enum class CellState {
  wait_rdy,
  send_CSQ,
  wait_CSQ,
  do_CSQ,
  send_QMTOPEN,
  wait_QMTOPEN,
  do_QMTOPEN,
  send_QMTCONN_once,
  poll_QMTCONN,
  wait_QMTCONN,
  do_QMTCONN,
  pub_header,
  pub_segment,
  wait_prompt,
  wait_QMTPUB,
  cellular_done,
  cellular_failed,
};

std::string_view to_string(CellState s);

namespace flags {
inline constexpr std::uint32_t kQmtconnSent = 1u << 0;
inline constexpr std::uint32_t kTransferComplete = 1u << 1;
}  // namespace flags

struct TimingParams {
  Duration rdy_wait = 3s;
  Duration csq_wait = 300ms;
  Duration qmtopen_wait = 5s;
  Duration qmtconn_wait = 5s;
  Duration qmtconn_query_wait = 300ms;
  Duration qmtpub_wait = 500ms;
  Duration prompt_wait = 5s;
  Duration qlts_wait = 300ms;
  std::uint32_t baud = 115200;  // 8N1: 8 data bits out of every 9 on the wire
  Duration loop_tick = 1ms;
  Duration max_duration = 600s;

  // Time to clock `bytes` out of the UART.
  Duration serial_time(std::size_t bytes) const;
  void validate() const;
};

struct FsmConfig {
  int connect_id = 5;
  std::string client_id = "clientExample";
  std::string host = "broker.hivemq.com";
  std::uint16_t port = 1883;
  std::string topic = "testing";
  int qos = 0;
  std::size_t segment_size = pipeline::kDefaultSegmentSize;
  int max_open_retries = 5;
  int max_conn_retries = 5;
  std::string file = std::string(pipeline::kEncodedFile);
};

struct FsmObserver {
  std::function<void(CellState from, CellState to, SimTime)> on_state;
  // segment is -1 for the header.
  std::function<void(int segment, std::size_t bytes, SimTime)> on_publish;
  std::function<void(CellState wait, SimTime started, SimTime ended)> on_wait_done;
};

// Non-blocking cellular handler. Each step does bounded work: at most one
// state transition and at most one write to the modem. Waits are measured
// from the moment the last write has finished clocking out.
class CellularFsm {
 public:
  CellularFsm(FsmConfig config, TimingParams timing, const VirtualSd& sd, FsmObserver observer = {});

  // Restart from wait_rdy as after a power cycle.
  void reset(SimTime now);

  // Appends serial_in to the receive buffer, advances, and returns the bytes
  // to write to the modem (possibly empty).
  std::string step(std::string_view serial_in, SimTime now);

  CellState state() const { return state_; }
  std::uint32_t flags_reg() const { return flags_; }
  bool finished() const;
  bool succeeded() const { return (flags_ & flags::kTransferComplete) != 0; }
  SimTime busy_until() const { return busy_until_; }
  std::size_t segment_cursor() const { return cursor_; }
  const std::string& rx_buffer() const { return rx_; }
  const std::optional<pipeline::SegmentPlan>& plan() const { return plan_; }
  const std::string& failure() const { return failure_; }
  const std::string& network_time() const { return qlts_; }
  const FsmConfig& config() const { return config_; }
  const TimingParams& timing() const { return timing_; }

 private:
  void go(CellState next, SimTime now);
  std::string send(std::string bytes, Duration budget, CellState next, SimTime now);
  bool waited(SimTime now) const { return now - wait_started_ >= wait_budget_; }
  void finish_wait(SimTime now);
  void fail_with(std::string why, SimTime now);
  bool saw(std::string_view token) const { return rx_.find(token) != std::string::npos; }
  std::string publish_command() const;

  FsmConfig config_;
  TimingParams timing_;
  const VirtualSd& sd_;
  FsmObserver observer_;

  CellState state_ = CellState::wait_rdy;
  std::uint32_t flags_ = 0;
  SimTime wait_started_{0};
  Duration wait_budget_{0};
  SimTime busy_until_{0};
  std::string rx_;
  std::size_t cursor_ = 0;
  std::optional<pipeline::SegmentPlan> plan_;
  int pending_segment_ = -1;  // what wait_prompt/wait_QMTPUB is carrying; -1 header
  bool polled_ = false;       // do_QMTCONN follows a status query
  bool qlts_sent_ = false;
  int open_retries_ = 0;
  int conn_retries_ = 0;
  int msgid_ = 0;
  std::string failure_;
  std::string qlts_;
};

}  // namespace fieldcam::device
