#include "mqtt/sim_network.hpp"

#include "common/error.hpp"

namespace fieldcam::mqtt {

SimNetwork::SimNetwork(EventQueue& queue, Broker& broker, std::string host, std::uint16_t port)
    : queue_(queue), broker_(broker), host_(std::move(host)), port_(port) {}

std::optional<ConnectionId> SimNetwork::dial(std::string_view host, std::uint16_t port,
                                             NetConditions up, NetConditions down,
                                             Receiver on_receive, Closed on_closed) {
  if (!reachable_ || host != host_ || port != port_) return std::nullopt;
  const ConnectionId conn = next_conn_++;
  links_.emplace(conn, Link{LossyLink(up), LossyLink(down), std::move(on_receive),
                            std::move(on_closed), {}, {}, true});
  broker_.on_open(conn);
  return conn;
}

bool SimNetwork::is_open(ConnectionId conn) const {
  auto it = links_.find(conn);
  return it != links_.end() && it->second.open;
}

void SimNetwork::set_drop_probability(ConnectionId conn, double p) {
  auto& link = links_.at(conn);
  link.up.set_drop_probability(p);
  link.down.set_drop_probability(p);
}

SimNetwork::LinkStats SimNetwork::uplink_stats(ConnectionId conn) const {
  return links_.at(conn).up_stats;
}

SimNetwork::LinkStats SimNetwork::downlink_stats(ConnectionId conn) const {
  return links_.at(conn).down_stats;
}

void SimNetwork::send(ConnectionId conn, const ControlPacket& packet) {
  auto it = links_.find(conn);
  if (it == links_.end() || !it->second.open) return;
  Link& link = it->second;
  const SimTime now = queue_.now();
  Bytes wire = encode_packet(packet);
  link.up_stats.packets++;
  link.up_stats.bytes += wire.size();
  const auto arrival = link.up.transfer(now);
  if (tap_) tap_(conn, Direction::ToBroker, packet, now, !arrival);
  if (!arrival) return;
  queue_.schedule(*arrival, [this, conn, wire = std::move(wire)](SimTime t) {
    if (!is_open(conn)) return;
    const ControlPacket decoded = decode_packet(wire);
    dispatch(broker_.on_packet(conn, decoded, t));
  });
}

void SimNetwork::deliver_to_client(ConnectionId conn, const ControlPacket& packet) {
  auto it = links_.find(conn);
  if (it == links_.end() || !it->second.open) return;
  Link& link = it->second;
  const SimTime now = queue_.now();
  Bytes wire = encode_packet(packet);
  link.down_stats.packets++;
  link.down_stats.bytes += wire.size();
  const auto arrival = link.down.transfer(now);
  if (tap_) tap_(conn, Direction::ToClient, packet, now, !arrival);
  if (!arrival) return;
  queue_.schedule(*arrival, [this, conn, wire = std::move(wire)](SimTime t) {
    auto it = links_.find(conn);
    if (it == links_.end() || !it->second.open) return;
    if (it->second.on_receive) it->second.on_receive(decode_packet(wire), t);
  });
}

void SimNetwork::dispatch(const Broker::StepResult& r) {
  for (const auto& out : r.packets) deliver_to_client(out.to, out.packet);
  for (ConnectionId conn : r.close) {
    auto it = links_.find(conn);
    if (it == links_.end() || !it->second.open) continue;
    it->second.open = false;
    const auto latency = it->second.down.conditions().latency;
    queue_.schedule(queue_.now() + latency, [this, conn](SimTime t) {
      auto it = links_.find(conn);
      if (it != links_.end() && it->second.on_closed) it->second.on_closed(t);
    });
  }
  arm_broker_timer();
}

void SimNetwork::hang_up(ConnectionId conn) {
  auto it = links_.find(conn);
  if (it == links_.end() || !it->second.open) return;
  it->second.open = false;
  broker_.on_close(conn);
}

void SimNetwork::arm_broker_timer() {
  const auto deadline = broker_.next_deadline();
  if (!deadline) return;
  if (broker_timer_ && *broker_timer_ <= *deadline) return;
  broker_timer_ = *deadline;
  queue_.schedule(*deadline, [this](SimTime t) {
    if (broker_timer_ && *broker_timer_ <= t) broker_timer_.reset();
    dispatch(broker_.on_timer(t));
  });
}

SimClient::SimClient(SimNetwork& net, std::string client_id, Callbacks callbacks)
    : net_(net), session_(std::move(client_id)), callbacks_(std::move(callbacks)) {}

SimClient::~SimClient() {
  *alive_ = false;
  if (conn_) net_.hang_up(*conn_);
}

bool SimClient::open(std::string_view host, std::uint16_t port, NetConditions up, NetConditions down) {
  if (conn_) return true;
  std::weak_ptr<bool> alive = alive_;
  conn_ = net_.dial(
      host, port, up, down,
      [this, alive](const ControlPacket& p, SimTime t) {
        if (alive.lock() && *alive.lock()) on_receive(p, t);
      },
      [this, alive](SimTime t) {
        if (alive.lock() && *alive.lock()) on_closed(t);
      });
  return conn_.has_value();
}

void SimClient::connect(std::uint16_t keep_alive) {
  if (!conn_) fail(ErrorCode::Network, "connect on a closed link");
  net_.send(*conn_, session_.connect_packet(keep_alive));
}

void SimClient::subscribe(std::string topic, QoS qos) {
  if (!conn_) fail(ErrorCode::Network, "subscribe on a closed link");
  net_.send(*conn_, session_.subscribe_packet(std::move(topic), qos));
}

std::uint16_t SimClient::publish(std::string topic, Bytes payload, QoS qos) {
  if (!conn_) fail(ErrorCode::Network, "publish on a closed link");
  auto pub = session_.publish(std::move(topic), std::move(payload), qos, net_.queue().now());
  net_.send(*conn_, pub.packet);
  arm_timer();
  return pub.packet_id;
}

void SimClient::disconnect() {
  if (!conn_) return;
  net_.send(*conn_, ControlPacket::simple(PacketType::Disconnect));
  net_.hang_up(*conn_);
  conn_.reset();
  session_.reset();
}

void SimClient::send_all(const std::vector<ControlPacket>& packets) {
  if (!conn_) return;
  for (const auto& p : packets) net_.send(*conn_, p);
}

void SimClient::on_receive(const ControlPacket& packet, SimTime now) {
  MqttClient::Events ev;
  try {
    ev = session_.on_packet(packet, now);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProtocolViolation) throw;
    if (conn_) net_.hang_up(*conn_);
    on_closed(now);
    return;
  }
  send_all(ev.send);
  arm_timer();
  if (ev.connack && callbacks_.on_connack) callbacks_.on_connack(*ev.connack, now);
  if (ev.suback && callbacks_.on_suback) callbacks_.on_suback(*ev.suback, now);
  for (auto id : ev.completed)
    if (callbacks_.on_publish_complete) callbacks_.on_publish_complete(id, now);
  for (const auto& m : ev.messages)
    if (callbacks_.on_message) callbacks_.on_message(m, now);
}

void SimClient::on_closed(SimTime now) {
  conn_.reset();
  session_.reset();
  timer_.reset();
  if (callbacks_.on_closed) callbacks_.on_closed(now);
}

void SimClient::arm_timer() {
  const auto deadline = session_.next_deadline();
  if (!deadline) return;
  if (timer_ && *timer_ <= *deadline) return;
  timer_ = *deadline;
  std::weak_ptr<bool> alive = alive_;
  net_.queue().schedule(*deadline, [this, alive](SimTime t) {
    auto a = alive.lock();
    if (!a || !*a) return;
    if (timer_ && *timer_ <= t) timer_.reset();
    if (!conn_) return;
    send_all(session_.on_timer(t));
    arm_timer();
  });
}

}  // namespace fieldcam::mqtt
