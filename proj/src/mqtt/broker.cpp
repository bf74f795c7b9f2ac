#include "mqtt/broker.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace fieldcam::mqtt {

bool is_valid_topic_filter(std::string_view topic) {
  return !topic.empty() && topic.find_first_of("+#") == std::string_view::npos &&
         topic.find('\0') == std::string_view::npos;
}

void Broker::on_open(ConnectionId conn) { connections_[conn] = Connection{}; }

void Broker::on_close(ConnectionId conn) { connections_.erase(conn); }

std::size_t Broker::session_count() const {
  return static_cast<std::size_t>(std::count_if(
      connections_.begin(), connections_.end(), [](const auto& kv) { return kv.second.session.has_value(); }));
}

const ClientSession* Broker::session(ConnectionId conn) const {
  auto it = connections_.find(conn);
  if (it == connections_.end() || !it->second.session) return nullptr;
  return &*it->second.session;
}

void Broker::close(ConnectionId conn, StepResult& out) {
  connections_.erase(conn);
  out.close.push_back(conn);
}

Broker::StepResult Broker::on_packet(ConnectionId conn, const ControlPacket& packet, SimTime now) {
  StepResult out;
  if (!connections_.contains(conn)) on_open(conn);
  try {
    handle(conn, packet, now, out);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProtocolViolation) throw;
    close(conn, out);
  }
  return out;
}

void Broker::handle(ConnectionId conn, const ControlPacket& packet, SimTime now, StepResult& out) {
  Connection& c = connections_.at(conn);

  if (!c.session) {
    if (packet.type != PacketType::Connect)
      fail(ErrorCode::ProtocolViolation, "first packet must be CONNECT");
    if (packet.protocol_name != "MQTT")
      fail(ErrorCode::ProtocolViolation, "unknown protocol name");
    if (packet.protocol_level != 4) {
      out.packets.push_back({conn, ControlPacket::connack(0x01)});
      close(conn, out);
      return;
    }
    std::string client_id = packet.client_id;
    if (client_id.empty()) {
      if (!packet.clean_session) {
        out.packets.push_back({conn, ControlPacket::connack(0x02)});
        close(conn, out);
        return;
      }
      client_id = "fieldcam-auto-" + std::to_string(++generated_ids_);
    }
    // Session takeover: a second CONNECT with the same client id evicts the first.
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (it->first != conn && it->second.session && it->second.session->client_id == client_id) {
        out.close.push_back(it->first);
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    ClientSession s{client_id, {}, OutboundFlow(retry_interval_), {}};
    connections_.at(conn).session = std::move(s);
    out.packets.push_back({conn, ControlPacket::connack(0x00)});
    return;
  }

  ClientSession& s = *c.session;
  switch (packet.type) {
    case PacketType::Connect:
      fail(ErrorCode::ProtocolViolation, "second CONNECT on one connection");
    case PacketType::Publish: {
      auto r = s.inbound.on_publish(packet);
      for (auto& p : r.send) out.packets.push_back({conn, std::move(p)});
      if (r.deliver) route(*r.deliver, now, out);
      break;
    }
    case PacketType::Pubrel:
      out.packets.push_back({conn, s.inbound.on_pubrel(packet)});
      break;
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubcomp: {
      auto r = s.outbound.on_ack(packet, now);
      for (auto& p : r.send) out.packets.push_back({conn, std::move(p)});
      break;
    }
    case PacketType::Subscribe: {
      std::vector<std::uint8_t> granted;
      for (const auto& t : packet.subscriptions) {
        if (!is_valid_topic_filter(t.topic)) {
          granted.push_back(kSubackFailure);
          continue;
        }
        s.subscriptions[t.topic] = t.qos;
        granted.push_back(static_cast<std::uint8_t>(t.qos));
      }
      out.packets.push_back({conn, ControlPacket::suback(packet.packet_id, std::move(granted))});
      break;
    }
    case PacketType::Pingreq:
      out.packets.push_back({conn, ControlPacket::simple(PacketType::Pingresp)});
      break;
    case PacketType::Disconnect:
      close(conn, out);
      break;
    case PacketType::Connack:
    case PacketType::Suback:
    case PacketType::Pingresp:
      fail(ErrorCode::ProtocolViolation,
           std::string(to_string(packet.type)) + " is server-to-client only");
  }
}

void Broker::route(const ControlPacket& publish, SimTime now, StepResult& out) {
  for (auto& [conn, c] : connections_) {
    if (!c.session) continue;
    auto it = c.session->subscriptions.find(publish.topic);
    if (it == c.session->subscriptions.end()) continue;
    const QoS effective = std::min(publish.qos, it->second);
    auto forwarded = c.session->outbound.publish(publish.topic, publish.payload, effective, now);
    out.packets.push_back({conn, std::move(forwarded)});
    ++forwarded_;
  }
}

Broker::StepResult Broker::on_timer(SimTime now) {
  StepResult out;
  for (auto& [conn, c] : connections_) {
    if (!c.session) continue;
    for (auto& p : c.session->outbound.on_timer(now)) out.packets.push_back({conn, std::move(p)});
  }
  return out;
}

std::optional<SimTime> Broker::next_deadline() const {
  std::optional<SimTime> next;
  for (const auto& [conn, c] : connections_) {
    if (!c.session) continue;
    const auto d = c.session->outbound.next_deadline();
    if (d && (!next || *d < *next)) next = d;
  }
  return next;
}

}  // namespace fieldcam::mqtt
