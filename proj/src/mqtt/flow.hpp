#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "common/sim_time.hpp"
#include "mqtt/packet.hpp"

namespace fieldcam::mqtt {

inline constexpr Duration kRetryInterval = 1s;

// Sender half of the PUBLISH handshakes.
//
//   QoS 0: PUBLISH once, nothing stored.
//   QoS 1: PUBLISH, resend with DUP until PUBACK.
//   QoS 2: PUBLISH, resend with DUP until PUBREC; then PUBREL, resend until PUBCOMP.
//
// Retries are unbounded.
class OutboundFlow {
 public:
  enum class Stage { AwaitPuback, AwaitPubrec, AwaitPubcomp };

  struct Inflight {
    ControlPacket publish;
    Stage stage;
    SimTime deadline;
  };

  struct AckResult {
    std::vector<ControlPacket> send;
    std::optional<std::uint16_t> completed;
  };

  explicit OutboundFlow(Duration retry_interval = kRetryInterval)
      : retry_interval_(retry_interval) {}

  // Assigns a packet id for QoS>0 and returns the first transmission.
  ControlPacket publish(std::string topic, Bytes payload, QoS qos, SimTime now);

  // PUBACK, PUBREC or PUBCOMP. An id with no matching in-flight stage is a
  // ProtocolViolation, except a PUBREC for a message already awaiting PUBCOMP,
  // which re-sends PUBREL.
  AckResult on_ack(const ControlPacket& ack, SimTime now);

  std::vector<ControlPacket> on_timer(SimTime now);
  std::optional<SimTime> next_deadline() const;

  // Ids also used by SUBSCRIBE so the two never collide.
  std::uint16_t allocate_id();
  void reserve(std::uint16_t id) { reserved_.insert(id); }
  void release(std::uint16_t id) { reserved_.erase(id); }

  const std::map<std::uint16_t, Inflight>& inflight() const { return inflight_; }

 private:
  Duration retry_interval_;
  std::map<std::uint16_t, Inflight> inflight_;
  std::set<std::uint16_t> reserved_;
  std::uint16_t next_id_ = 1;
};

// Receiver half. QoS 2 ids are remembered from PUBLISH until PUBREL so a
// resent PUBLISH is acknowledged but not delivered twice.
class InboundFlow {
 public:
  struct Result {
    std::vector<ControlPacket> send;
    std::optional<ControlPacket> deliver;
  };

  Result on_publish(const ControlPacket& publish);

  // Always answers PUBCOMP, even for an unknown id.
  ControlPacket on_pubrel(const ControlPacket& pubrel);

  const std::set<std::uint16_t>& pending_qos2() const { return pending_qos2_; }

 private:
  std::set<std::uint16_t> pending_qos2_;
};

}  // namespace fieldcam::mqtt
