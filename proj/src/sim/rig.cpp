#include "sim/rig.hpp"

#include "common/error.hpp"

namespace fieldcam::sim {

SimRig::SimRig(RigConfig config)
    : config_(std::move(config)),
      net_(queue_, broker_, config_.device.fsm.host, config_.device.fsm.port),
      modem_(config_.modem, net_),
      device_(config_.device) {
  if (config_.with_receiver) wire_receiver();
}

SimRig::~SimRig() = default;

void SimRig::wire_receiver() {
  service_ = std::make_unique<receiver::ReceiverService>(
      config_.receiver, [this] { return static_cast<std::int64_t>(to_ms(queue_.now())); });

  mqtt::SimClient::Callbacks cb;
  cb.on_connack = [this](std::uint8_t rc, SimTime now) {
    if (rc != 0) return;
    const auto req = service_->on_connect(now);
    subscriber_->subscribe(req.topic, req.qos);
  };
  cb.on_suback = [this](const std::vector<std::uint8_t>& granted, SimTime now) {
    service_->on_suback(granted, now);
    if (service_->subscribed()) return;
    queue_.schedule(now + service_->current_backoff(), [this](SimTime t) {
      if (auto req = service_->poll(t)) subscriber_->subscribe(req->topic, req->qos);
    });
  };
  cb.on_message = [this](const mqtt::Message& m, SimTime) { service_->on_message(m.topic, m.payload); };
  subscriber_ = std::make_unique<mqtt::SimClient>(net_, config_.receiver.client_id, std::move(cb));
  if (!subscriber_->open(net_.host(), net_.port()))
    fail(ErrorCode::Network, "receiver cannot reach the simulated broker");
  subscriber_->connect();
  queue_.run_until(queue_.now() + 1s);
  if (!service_->subscribed()) fail(ErrorCode::Network, "receiver did not subscribe");
}

device::TransmissionTrace SimRig::transmit() {
  auto trace = device::run_transmission(device_, modem_, queue_.now());
  queue_.run_until(queue_.now() + config_.settle);
  return trace;
}

}  // namespace fieldcam::sim
