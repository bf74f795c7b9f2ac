#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common/sim_time.hpp"
#include "mqtt/flow.hpp"
#include "mqtt/packet.hpp"

namespace fieldcam::mqtt {

using ConnectionId = std::uint64_t;

struct ClientSession {
  std::string client_id;
  std::map<std::string, QoS> subscriptions;
  OutboundFlow outbound;
  InboundFlow inbound;
};

// Event-driven MQTT 3.1.1 broker core. It owns no sockets and no clock: hosts
// feed it one event at a time and transmit what it returns.
//
// Topic matching is exact-string; filters containing '+' or '#' are refused
// in SUBACK. Sessions are clean-only, and retained messages and wills are
// not stored.
class Broker {
 public:
  struct Outbound {
    ConnectionId to;
    ControlPacket packet;
  };

  struct StepResult {
    std::vector<Outbound> packets;
    std::vector<ConnectionId> close;
  };

  explicit Broker(Duration retry_interval = kRetryInterval) : retry_interval_(retry_interval) {}

  void on_open(ConnectionId conn);
  StepResult on_packet(ConnectionId conn, const ControlPacket& packet, SimTime now);
  StepResult on_timer(SimTime now);
  void on_close(ConnectionId conn);

  std::optional<SimTime> next_deadline() const;

  // Number of connections that have completed CONNECT.
  std::size_t session_count() const;
  const ClientSession* session(ConnectionId conn) const;

  std::uint64_t forwarded_count() const { return forwarded_; }

 private:
  struct Connection {
    std::optional<ClientSession> session;
  };

  void handle(ConnectionId conn, const ControlPacket& packet, SimTime now, StepResult& out);
  void route(const ControlPacket& publish, SimTime now, StepResult& out);
  void close(ConnectionId conn, StepResult& out);

  Duration retry_interval_;
  std::map<ConnectionId, Connection> connections_;
  std::uint64_t forwarded_ = 0;
  std::uint64_t generated_ids_ = 0;
};

bool is_valid_topic_filter(std::string_view topic);

}  // namespace fieldcam::mqtt
