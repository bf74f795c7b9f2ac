#include "mqtt/client.hpp"

#include "common/error.hpp"

namespace fieldcam::mqtt {

MqttClient::MqttClient(std::string client_id, Duration retry_interval)
    : client_id_(std::move(client_id)), outbound_(retry_interval), retry_interval_(retry_interval) {}

ControlPacket MqttClient::connect_packet(std::uint16_t keep_alive) const {
  return ControlPacket::connect(client_id_, keep_alive);
}

ControlPacket MqttClient::subscribe_packet(std::string topic, QoS qos) {
  const std::uint16_t id = outbound_.allocate_id();
  outbound_.reserve(id);
  pending_subscribes_.insert(id);
  return ControlPacket::subscribe(id, {TopicRequest{std::move(topic), qos}});
}

MqttClient::Published MqttClient::publish(std::string topic, Bytes payload, QoS qos, SimTime now) {
  auto packet = outbound_.publish(std::move(topic), std::move(payload), qos, now);
  return Published{packet.packet_id, std::move(packet)};
}

MqttClient::Events MqttClient::on_packet(const ControlPacket& packet, SimTime now) {
  Events ev;
  switch (packet.type) {
    case PacketType::Connack:
      connected_ = packet.return_code == 0;
      ev.connack = packet.return_code;
      break;
    case PacketType::Suback:
      if (pending_subscribes_.erase(packet.packet_id) == 0)
        fail(ErrorCode::ProtocolViolation, "SUBACK for unknown packet id");
      outbound_.release(packet.packet_id);
      ev.suback = packet.granted;
      break;
    case PacketType::Publish: {
      auto r = inbound_.on_publish(packet);
      ev.send = std::move(r.send);
      if (r.deliver)
        ev.messages.push_back(Message{r.deliver->topic, r.deliver->payload, r.deliver->qos, r.deliver->dup});
      break;
    }
    case PacketType::Pubrel:
      ev.send.push_back(inbound_.on_pubrel(packet));
      break;
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubcomp: {
      auto r = outbound_.on_ack(packet, now);
      ev.send = std::move(r.send);
      if (r.completed) ev.completed.push_back(*r.completed);
      break;
    }
    case PacketType::Pingresp:
      break;
    default:
      fail(ErrorCode::ProtocolViolation,
           std::string(to_string(packet.type)) + " is not valid from a server");
  }
  return ev;
}

std::vector<ControlPacket> MqttClient::on_timer(SimTime now) { return outbound_.on_timer(now); }

void MqttClient::reset() {
  connected_ = false;
  outbound_ = OutboundFlow(retry_interval_);
  inbound_ = InboundFlow{};
  pending_subscribes_.clear();
}

}  // namespace fieldcam::mqtt
