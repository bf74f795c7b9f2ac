#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common/bytes.hpp"
#include "common/sim_time.hpp"
#include "mqtt/packet.hpp"
#include "pipeline/pipeline.hpp"
#include "receiver/reassembly.hpp"
#include "receiver/store.hpp"

namespace fieldcam::receiver {

struct ReceiverConfig {
  std::string topic = "testing";
  std::string password;
  pipeline::CipherConfig cipher;
  std::filesystem::path storage_dir = "fieldcam-store";
  std::string broker_host = "127.0.0.1";
  std::uint16_t broker_port = 1883;
  std::string client_id = "fieldcam-receiver";
  std::string http_host = "127.0.0.1";
  std::uint16_t http_port = 8080;
  std::string static_dir;  // dashboard assets, optional
  Duration initial_backoff = 1s;
  Duration max_backoff = 30s;

  void validate() const;
};

struct SubscribeRequest {
  std::string topic;
  mqtt::QoS qos = mqtt::QoS::AtMostOnce;
};

// Subscriber side of the transfer. Transport-agnostic: the caller owns the
// MQTT connection and forwards CONNACK, SUBACK and PUBLISH events here.
// Message handling and decodes may come from different threads.
class ReceiverService {
 public:
  ReceiverService(ReceiverConfig config, Reassembler::Clock clock);

  // Call after every accepted CONNACK; returns the subscription to send.
  SubscribeRequest on_connect(SimTime now);
  // A refused subscription is retried from poll() with exponential backoff.
  void on_suback(const std::vector<std::uint8_t>& granted, SimTime now);
  std::optional<SubscribeRequest> poll(SimTime now);
  bool subscribed() const;
  Duration current_backoff() const;

  MessageResult on_message(std::string_view topic, ByteView payload);

  std::vector<TransmissionRecord> list() const;
  std::optional<TransmissionRecord> find(std::uint64_t id) const;
  // Throws AuthFailed, NotFound or Conflict; decode errors propagate and
  // leave the record stored.
  TransmissionRecord decode(std::uint64_t id, std::string_view password);
  std::optional<Bytes> latest_image() const;

  ReassemblyState reassembly_state() const;
  const ReceiverConfig& config() const { return config_; }

 private:
  ReceiverConfig config_;
  mutable std::mutex mu_;
  RecordStore store_;
  Reassembler reassembler_;
  std::set<std::uint64_t> decoding_;
  bool subscribed_ = false;
  std::optional<SimTime> retry_at_;
  Duration backoff_;
};

bool password_matches(std::string_view expected, std::string_view given);

}  // namespace fieldcam::receiver
