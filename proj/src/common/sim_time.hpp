#pragma once

#include <chrono>
#include <cstdint>

namespace fieldcam {

// Virtual time is an offset from the start of a simulation, in microseconds.
// Nothing in the core reads a wall clock; callers inject `now`.
using Duration = std::chrono::microseconds;
using SimTime = Duration;

using namespace std::chrono_literals;

inline double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e6; }

inline Duration from_ms(double ms) {
  return Duration(static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5)));
}

}  // namespace fieldcam
