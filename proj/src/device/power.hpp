#pragma once

#include <vector>

#include "common/sim_time.hpp"

namespace fieldcam::device {

enum class LatchState { Off, On };
enum class Pulse { On, Off };

struct LatchTransition {
  SimTime at;
  LatchState to;
};

struct PowerParams {
  double quiescent_current = 8.885e-6;  // A, latch off
  double active_current = 0.190;        // A, device running
};

// Latching power switch driven by two pulse inputs. A pulse matching the
// current state changes nothing and is not logged.
class PowerLatch {
 public:
  explicit PowerLatch(PowerParams params = {}) : params_(params) {}

  void pulse(Pulse which, SimTime t);
  LatchState state() const { return state_; }
  bool is_on() const { return state_ == LatchState::On; }
  const std::vector<LatchTransition>& transitions() const { return transitions_; }
  const PowerParams& params() const { return params_; }

 private:
  PowerParams params_;
  LatchState state_ = LatchState::Off;
  std::vector<LatchTransition> transitions_;
};

struct ChargeReport {
  double charge_coulombs = 0;
  double average_current = 0;  // A
  Duration on_time{0};
  Duration window{0};
};

// Integrates supply current over [start, end). The latch is taken to be off
// before its first transition.
ChargeReport integrate_charge(const std::vector<LatchTransition>& transitions, SimTime start,
                              SimTime end, const PowerParams& params);

// `runs` active periods of `on_time` each inside `window`, the rest off.
ChargeReport duty_cycle_charge(Duration on_time, int runs, Duration window, const PowerParams& params);

}  // namespace fieldcam::device
