#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mqtt/broker.hpp"
#include "mqtt/client.hpp"
#include "mqtt/event_queue.hpp"
#include "mqtt/net.hpp"

namespace fieldcam::mqtt {

enum class Direction { ToBroker, ToClient };

// In-memory transport between clients and one Broker. Every packet is
// encoded to wire bytes, carried across a LossyLink and decoded again on
// arrival.
class SimNetwork {
 public:
  using Receiver = std::function<void(const ControlPacket&, SimTime)>;
  using Closed = std::function<void(SimTime)>;
  using Tap = std::function<void(ConnectionId, Direction, const ControlPacket&, SimTime, bool dropped)>;

  struct LinkStats {
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
  };

  SimNetwork(EventQueue& queue, Broker& broker, std::string host = "broker.hivemq.com",
             std::uint16_t port = 1883);

  void set_reachable(bool reachable) { reachable_ = reachable; }
  bool reachable() const { return reachable_; }
  const std::string& host() const { return host_; }
  std::uint16_t port() const { return port_; }

  std::optional<ConnectionId> dial(std::string_view host, std::uint16_t port, NetConditions up,
                                   NetConditions down, Receiver on_receive, Closed on_closed = {});
  void send(ConnectionId conn, const ControlPacket& packet);
  void hang_up(ConnectionId conn);
  bool is_open(ConnectionId conn) const;

  void set_tap(Tap tap) { tap_ = std::move(tap); }
  void set_drop_probability(ConnectionId conn, double p);

  LinkStats uplink_stats(ConnectionId conn) const;
  LinkStats downlink_stats(ConnectionId conn) const;

  EventQueue& queue() { return queue_; }
  Broker& broker() { return broker_; }

 private:
  struct Link {
    LossyLink up;
    LossyLink down;
    Receiver on_receive;
    Closed on_closed;
    LinkStats up_stats;
    LinkStats down_stats;
    bool open = true;
  };

  void dispatch(const Broker::StepResult& r);
  void deliver_to_client(ConnectionId conn, const ControlPacket& packet);
  void arm_broker_timer();

  EventQueue& queue_;
  Broker& broker_;
  std::string host_;
  std::uint16_t port_;
  bool reachable_ = true;
  std::map<ConnectionId, Link> links_;
  ConnectionId next_conn_ = 1;
  std::optional<SimTime> broker_timer_;
  Tap tap_;
};

// Binds an MqttClient to a SimNetwork and drives its retransmission timers
// from the event queue.
class SimClient {
 public:
  struct Callbacks {
    std::function<void(std::uint8_t rc, SimTime)> on_connack;
    std::function<void(const std::vector<std::uint8_t>& granted, SimTime)> on_suback;
    std::function<void(const Message&, SimTime)> on_message;
    std::function<void(std::uint16_t packet_id, SimTime)> on_publish_complete;
    std::function<void(SimTime)> on_closed;
  };

  SimClient(SimNetwork& net, std::string client_id, Callbacks callbacks = {});
  ~SimClient();
  SimClient(const SimClient&) = delete;
  SimClient& operator=(const SimClient&) = delete;

  void set_callbacks(Callbacks callbacks) { callbacks_ = std::move(callbacks); }

  // TCP-level open; false when the broker is unreachable.
  bool open(std::string_view host, std::uint16_t port, NetConditions up = {}, NetConditions down = {});
  void connect(std::uint16_t keep_alive = 60);
  void subscribe(std::string topic, QoS qos);
  std::uint16_t publish(std::string topic, Bytes payload, QoS qos);
  void disconnect();

  bool is_open() const { return conn_.has_value(); }
  bool connected() const { return conn_.has_value() && session_.connected(); }
  std::optional<ConnectionId> connection() const { return conn_; }
  MqttClient& session() { return session_; }

 private:
  void on_receive(const ControlPacket& packet, SimTime now);
  void on_closed(SimTime now);
  void send_all(const std::vector<ControlPacket>& packets);
  void arm_timer();

  SimNetwork& net_;
  MqttClient session_;
  Callbacks callbacks_;
  std::optional<ConnectionId> conn_;
  std::optional<SimTime> timer_;
  // Guards queued lambdas against this object's destruction.
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

}  // namespace fieldcam::mqtt
