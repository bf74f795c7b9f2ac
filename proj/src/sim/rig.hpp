#pragma once

#include <memory>
#include <optional>

#include "device/transmission.hpp"
#include "modem/bg96.hpp"
#include "mqtt/broker.hpp"
#include "mqtt/event_queue.hpp"
#include "mqtt/sim_network.hpp"
#include "receiver/service.hpp"

namespace fieldcam::sim {

struct RigConfig {
  device::DeviceConfig device;
  modem::ModemConfig modem;
  receiver::ReceiverConfig receiver;
  bool with_receiver = true;
  // Quiet time after each transmission so the last publishes land.
  Duration settle = 2s;
};

// Device, modem, broker and receiver on one virtual clock.
class SimRig {
 public:
  explicit SimRig(RigConfig config);
  ~SimRig();
  SimRig(const SimRig&) = delete;
  SimRig& operator=(const SimRig&) = delete;

  // One capture-and-upload cycle starting now.
  device::TransmissionTrace transmit();

  mqtt::EventQueue& queue() { return queue_; }
  mqtt::Broker& broker() { return broker_; }
  mqtt::SimNetwork& network() { return net_; }
  modem::Bg96Modem& modem() { return modem_; }
  device::Device& device() { return device_; }
  receiver::ReceiverService* receiver() { return service_.get(); }
  const RigConfig& config() const { return config_; }

 private:
  void wire_receiver();

  RigConfig config_;
  mqtt::EventQueue queue_;
  mqtt::Broker broker_;
  mqtt::SimNetwork net_;
  modem::Bg96Modem modem_;
  device::Device device_;
  std::unique_ptr<receiver::ReceiverService> service_;
  std::unique_ptr<mqtt::SimClient> subscriber_;
};

}  // namespace fieldcam::sim
