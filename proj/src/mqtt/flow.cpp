#include "mqtt/flow.hpp"

#include "common/error.hpp"

namespace fieldcam::mqtt {

std::uint16_t OutboundFlow::allocate_id() {
  for (std::uint32_t tries = 0; tries < 0xffff; ++tries) {
    const std::uint16_t id = next_id_;
    next_id_ = next_id_ == 0xffff ? 1 : static_cast<std::uint16_t>(next_id_ + 1);
    if (!inflight_.contains(id) && !reserved_.contains(id)) return id;
  }
  fail(ErrorCode::ProtocolViolation, "all 65535 packet identifiers are in flight");
}

ControlPacket OutboundFlow::publish(std::string topic, Bytes payload, QoS qos, SimTime now) {
  if (qos == QoS::AtMostOnce) return ControlPacket::publish(std::move(topic), std::move(payload));

  const std::uint16_t id = allocate_id();
  auto packet = ControlPacket::publish(std::move(topic), std::move(payload), qos, id);
  const Stage stage = qos == QoS::AtLeastOnce ? Stage::AwaitPuback : Stage::AwaitPubrec;
  inflight_.emplace(id, Inflight{packet, stage, now + retry_interval_});
  return packet;
}

OutboundFlow::AckResult OutboundFlow::on_ack(const ControlPacket& ack, SimTime now) {
  AckResult result;
  auto it = inflight_.find(ack.packet_id);
  auto violation = [&] {
    fail(ErrorCode::ProtocolViolation, std::string(to_string(ack.type)) + " for unknown packet id " +
                                           std::to_string(ack.packet_id));
  };
  if (it == inflight_.end()) violation();
  Inflight& f = it->second;

  switch (ack.type) {
    case PacketType::Puback:
      if (f.stage != Stage::AwaitPuback) violation();
      result.completed = ack.packet_id;
      inflight_.erase(it);
      break;
    case PacketType::Pubrec:
      if (f.stage == Stage::AwaitPuback) violation();
      f.stage = Stage::AwaitPubcomp;
      f.deadline = now + retry_interval_;
      result.send.push_back(ControlPacket::ack(PacketType::Pubrel, ack.packet_id));
      break;
    case PacketType::Pubcomp:
      if (f.stage != Stage::AwaitPubcomp) violation();
      result.completed = ack.packet_id;
      inflight_.erase(it);
      break;
    default:
      fail(ErrorCode::InvalidArgument, "not an acknowledgement packet");
  }
  return result;
}

std::vector<ControlPacket> OutboundFlow::on_timer(SimTime now) {
  std::vector<ControlPacket> out;
  for (auto& [id, f] : inflight_) {
    if (f.deadline > now) continue;
    f.deadline = now + retry_interval_;
    if (f.stage == Stage::AwaitPubcomp) {
      out.push_back(ControlPacket::ack(PacketType::Pubrel, id));
    } else {
      f.publish.dup = true;
      out.push_back(f.publish);
    }
  }
  return out;
}

std::optional<SimTime> OutboundFlow::next_deadline() const {
  std::optional<SimTime> next;
  for (const auto& [id, f] : inflight_)
    if (!next || f.deadline < *next) next = f.deadline;
  return next;
}

InboundFlow::Result InboundFlow::on_publish(const ControlPacket& publish) {
  Result r;
  switch (publish.qos) {
    case QoS::AtMostOnce:
      r.deliver = publish;
      break;
    case QoS::AtLeastOnce:
      r.deliver = publish;
      r.send.push_back(ControlPacket::ack(PacketType::Puback, publish.packet_id));
      break;
    case QoS::ExactlyOnce:
      if (pending_qos2_.insert(publish.packet_id).second) r.deliver = publish;
      r.send.push_back(ControlPacket::ack(PacketType::Pubrec, publish.packet_id));
      break;
  }
  return r;
}

ControlPacket InboundFlow::on_pubrel(const ControlPacket& pubrel) {
  pending_qos2_.erase(pubrel.packet_id);
  return ControlPacket::ack(PacketType::Pubcomp, pubrel.packet_id);
}

}  // namespace fieldcam::mqtt
