#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "receiver/http_api.hpp"
#include "receiver/service.hpp"

namespace fieldcam::receiver {

// Runs a ReceiverService against a real MQTT broker over TCP and serves its
// HTTP API. Reconnects with the service's backoff when the broker goes away.
class ReceiverRunner {
 public:
  explicit ReceiverRunner(ReceiverConfig config);
  ~ReceiverRunner();
  ReceiverRunner(const ReceiverRunner&) = delete;
  ReceiverRunner& operator=(const ReceiverRunner&) = delete;

  void start();
  void stop();

  ReceiverService& service() { return *service_; }
  std::uint16_t http_port() const;
  bool wait_subscribed(std::chrono::milliseconds timeout);
  // Messages handed to the service so far.
  std::uint64_t messages() const { return messages_.load(); }

 private:
  void run();
  SimTime elapsed() const;

  ReceiverConfig config_;
  std::unique_ptr<ReceiverService> service_;
  std::unique_ptr<HttpApi> api_;
  std::unique_ptr<HttpServer> http_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> messages_{0};
  std::mutex mu_;
  std::condition_variable cv_;
  bool subscribed_ = false;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
};

}  // namespace fieldcam::receiver
