#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common/sim_time.hpp"
#include "mqtt/flow.hpp"
#include "mqtt/packet.hpp"

namespace fieldcam::mqtt {

struct Message {
  std::string topic;
  Bytes payload;
  QoS qos = QoS::AtMostOnce;
  bool dup = false;
};

// Client-side MQTT session without I/O. Callers send whatever packets the
// methods return and feed inbound packets back through on_packet.
class MqttClient {
 public:
  struct Events {
    std::vector<ControlPacket> send;
    std::vector<Message> messages;
    std::optional<std::uint8_t> connack;
    std::optional<std::vector<std::uint8_t>> suback;
    std::vector<std::uint16_t> completed;
  };

  explicit MqttClient(std::string client_id, Duration retry_interval = kRetryInterval);

  const std::string& client_id() const { return client_id_; }
  bool connected() const { return connected_; }

  ControlPacket connect_packet(std::uint16_t keep_alive = 60) const;
  ControlPacket subscribe_packet(std::string topic, QoS qos);

  struct Published {
    std::uint16_t packet_id;  // 0 for QoS 0
    ControlPacket packet;
  };
  Published publish(std::string topic, Bytes payload, QoS qos, SimTime now);

  // Throws ProtocolViolation for acks that match nothing in flight.
  Events on_packet(const ControlPacket& packet, SimTime now);
  std::vector<ControlPacket> on_timer(SimTime now);
  std::optional<SimTime> next_deadline() const { return outbound_.next_deadline(); }

  std::size_t inflight() const { return outbound_.inflight().size(); }
  void reset();

 private:
  std::string client_id_;
  bool connected_ = false;
  OutboundFlow outbound_;
  InboundFlow inbound_;
  std::set<std::uint16_t> pending_subscribes_;
  Duration retry_interval_;
};

}  // namespace fieldcam::mqtt
