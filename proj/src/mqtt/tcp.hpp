#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "mqtt/broker.hpp"
#include "mqtt/client.hpp"

namespace fieldcam::mqtt {

// Serves the Broker core over TCP, speaking MQTT 3.1.1 wire format. One
// poll() thread handles every socket, so broker events stay serialized.
class TcpBroker {
 public:
  // Port 0 binds an ephemeral port; see port().
  explicit TcpBroker(std::string bind_host = "0.0.0.0", std::uint16_t port = 1883);
  ~TcpBroker();
  TcpBroker(const TcpBroker&) = delete;
  TcpBroker& operator=(const TcpBroker&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void run();

  std::string bind_host_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> running_{false};
  std::thread thread_;
};

// Blocking client over a TCP socket. Not thread-safe; one owner drives it.
class TcpMqttClient {
 public:
  explicit TcpMqttClient(std::string client_id);
  ~TcpMqttClient();
  TcpMqttClient(const TcpMqttClient&) = delete;
  TcpMqttClient& operator=(const TcpMqttClient&) = delete;

  // TCP connect, CONNECT, wait for CONNACK. Throws Error(Network).
  void connect(const std::string& host, std::uint16_t port,
               std::chrono::milliseconds timeout = std::chrono::seconds(5));

  // Sends SUBSCRIBE without waiting; the SUBACK shows up in poll().
  void subscribe(std::string topic, QoS qos);

  // Returns once the QoS handshake completes (immediately for QoS 0).
  void publish(std::string topic, Bytes payload, QoS qos,
               std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Waits up to `timeout` for inbound traffic and returns what it produced.
  MqttClient::Events poll(std::chrono::milliseconds timeout);

  // PINGREQ; the PINGRESP is consumed by poll().
  void ping();

  void disconnect();
  bool connected() const { return fd_ >= 0 && session_.connected(); }

 private:
  void send_packet(const ControlPacket& packet);
  bool read_some(std::chrono::milliseconds timeout);
  MqttClient::Events drain(SimTime now);
  SimTime now() const;
  void close_socket();

  MqttClient session_;
  int fd_ = -1;
  Bytes rx_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
};

}  // namespace fieldcam::mqtt
