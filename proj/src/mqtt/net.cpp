#include "mqtt/net.hpp"

#include "common/error.hpp"

namespace fieldcam::mqtt {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::InvalidArgument, "drop probability must lie in [0, 1]");
}

}  // namespace

LossyLink::LossyLink(NetConditions conditions)
    : conditions_(conditions), rng_(conditions.rng_seed) {
  check_probability(conditions.drop_probability);
  if (conditions.latency < Duration::zero())
    fail(ErrorCode::InvalidArgument, "latency must be non-negative");
}

void LossyLink::set_drop_probability(double p) {
  check_probability(p);
  conditions_.drop_probability = p;
}

std::optional<SimTime> LossyLink::transfer(SimTime now) {
  // 53 high bits -> uniform double in [0, 1), independent of the standard
  // library's distribution implementations.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  if (u < conditions_.drop_probability) {
    ++dropped_;
    return std::nullopt;
  }
  ++delivered_;
  return now + conditions_.latency;
}

}  // namespace fieldcam::mqtt
