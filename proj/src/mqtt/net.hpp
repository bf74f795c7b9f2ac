#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "common/sim_time.hpp"

namespace fieldcam::mqtt {

struct NetConditions {
  double drop_probability = 0.0;
  Duration latency = 20ms;
  std::uint64_t rng_seed = 1;
};

// One direction of a simulated link. Each transfer consumes exactly one draw
// from a seeded 64-bit Mersenne Twister, so the same seed and the same number
// of transfers always give the same drop pattern.
class LossyLink {
 public:
  explicit LossyLink(NetConditions conditions);

  // Delivery time, or nullopt if the packet is lost.
  std::optional<SimTime> transfer(SimTime now);

  const NetConditions& conditions() const { return conditions_; }
  // Keeps the random stream position.
  void set_drop_probability(double p);

  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  NetConditions conditions_;
  std::mt19937_64 rng_;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace fieldcam::mqtt
