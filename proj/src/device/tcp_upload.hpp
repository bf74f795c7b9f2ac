#pragma once

#include <string>

#include "device/transmission.hpp"

namespace fieldcam::device {

struct UploadResult {
  std::size_t encoded_size = 0;
  pipeline::SegmentPlan plan;
  std::size_t publishes = 0;
};

// Encodes `raw` and publishes the header and segments to a real broker over
// TCP, without the modem. Uses the FSM's client id, topic, QoS and segment
// size. Throws Network on connection failure.
UploadResult upload_over_tcp(const Bytes& raw, const DeviceConfig& config, const std::string& host,
                             std::uint16_t port);

}  // namespace fieldcam::device
