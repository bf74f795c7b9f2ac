#include "device/power.hpp"

#include "common/error.hpp"

namespace fieldcam::device {

void PowerLatch::pulse(Pulse which, SimTime t) {
  const LatchState next = which == Pulse::On ? LatchState::On : LatchState::Off;
  if (next == state_) return;
  if (!transitions_.empty() && t < transitions_.back().at)
    fail(ErrorCode::InvalidArgument, "latch pulses must be time-ordered");
  state_ = next;
  transitions_.push_back({t, next});
}

ChargeReport integrate_charge(const std::vector<LatchTransition>& transitions, SimTime start,
                              SimTime end, const PowerParams& params) {
  if (end <= start) fail(ErrorCode::InvalidArgument, "empty integration window");
  ChargeReport r;
  r.window = end - start;
  LatchState state = LatchState::Off;
  SimTime cursor = start;
  auto account = [&](SimTime until) {
    if (until <= cursor) return;
    if (state == LatchState::On) r.on_time += until - cursor;
    cursor = until;
  };
  for (const auto& tr : transitions) {
    if (tr.at >= end) break;
    account(tr.at);
    state = tr.to;
  }
  account(end);
  const double on_s = to_seconds(r.on_time);
  const double off_s = to_seconds(r.window) - on_s;
  r.charge_coulombs = params.active_current * on_s + params.quiescent_current * off_s;
  r.average_current = r.charge_coulombs / to_seconds(r.window);
  return r;
}

ChargeReport duty_cycle_charge(Duration on_time, int runs, Duration window, const PowerParams& params) {
  if (runs < 0 || on_time < 0us) fail(ErrorCode::InvalidArgument, "negative duty cycle");
  if (window <= 0us || on_time * runs > window)
    fail(ErrorCode::InvalidArgument, "active time exceeds the window");
  std::vector<LatchTransition> tr;
  SimTime t{0};
  for (int i = 0; i < runs; ++i) {
    tr.push_back({t, LatchState::On});
    tr.push_back({t + on_time, LatchState::Off});
    t += on_time;
  }
  return integrate_charge(tr, SimTime{0}, window, params);
}

}  // namespace fieldcam::device
