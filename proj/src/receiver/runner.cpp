#include "receiver/runner.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "common/error.hpp"
#include "mqtt/tcp.hpp"

namespace fieldcam::receiver {

namespace {

constexpr auto kPollSlice = std::chrono::milliseconds(50);
constexpr auto kPingEvery = std::chrono::seconds(30);

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ReceiverRunner::ReceiverRunner(ReceiverConfig config) : config_(std::move(config)) {
  config_.validate();
  service_ = std::make_unique<ReceiverService>(config_, wall_ms);
  api_ = std::make_unique<HttpApi>(*service_);
}

ReceiverRunner::~ReceiverRunner() { stop(); }

SimTime ReceiverRunner::elapsed() const {
  return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now() - epoch_);
}

void ReceiverRunner::start() {
  if (running_) return;
  http_ = std::make_unique<HttpServer>(*api_, config_.http_host, config_.http_port, config_.static_dir);
  http_->start();
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void ReceiverRunner::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  if (http_) http_->stop();
}

std::uint16_t ReceiverRunner::http_port() const { return http_ ? http_->port() : 0; }

bool ReceiverRunner::wait_subscribed(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [this] { return subscribed_; });
}

void ReceiverRunner::run() {
  Duration reconnect_delay = config_.initial_backoff;
  while (running_) {
    mqtt::TcpMqttClient client(config_.client_id);
    try {
      client.connect(config_.broker_host, config_.broker_port);
    } catch (const Error& e) {
      fmt::print(stderr, "receiver: {}; retrying in {} ms\n", e.what(), reconnect_delay.count() / 1000);
      const auto until = std::chrono::steady_clock::now() + reconnect_delay;
      while (running_ && std::chrono::steady_clock::now() < until) std::this_thread::sleep_for(kPollSlice);
      reconnect_delay = std::min(reconnect_delay * 2, config_.max_backoff);
      continue;
    }
    reconnect_delay = config_.initial_backoff;
    const auto req = service_->on_connect(elapsed());
    client.subscribe(req.topic, req.qos);
    auto last_ping = std::chrono::steady_clock::now();

    while (running_ && client.connected()) {
      const auto ev = client.poll(kPollSlice);
      if (ev.suback) {
        service_->on_suback(*ev.suback, elapsed());
        std::lock_guard lock(mu_);
        subscribed_ = service_->subscribed();
        cv_.notify_all();
      }
      for (const auto& m : ev.messages) {
        service_->on_message(m.topic, m.payload);
        ++messages_;
      }
      if (auto retry = service_->poll(elapsed())) client.subscribe(retry->topic, retry->qos);
      if (std::chrono::steady_clock::now() - last_ping >= kPingEvery) {
        client.ping();
        last_ping = std::chrono::steady_clock::now();
      }
    }
    {
      std::lock_guard lock(mu_);
      subscribed_ = false;
    }
    client.disconnect();
  }
}

}  // namespace fieldcam::receiver
