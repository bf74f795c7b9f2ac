#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "receiver/service.hpp"

namespace httplib {
class Server;
}

namespace fieldcam::receiver {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

// Routes:
//   GET  /api/transmissions
//   POST /api/transmissions/{id}/decode   {"password": "..."}
//   GET  /api/images/latest?cb=<nonce>
class HttpApi {
 public:
  explicit HttpApi(ReceiverService& service) : service_(service) {}
  HttpResponse handle(const HttpRequest& request);

 private:
  HttpResponse list();
  HttpResponse decode(const std::string& id_text, const std::string& body);
  HttpResponse latest_image();

  ReceiverService& service_;
};

std::string record_json(const TransmissionRecord& r);
std::string records_json(const std::vector<TransmissionRecord>& records);

// Serves an HttpApi over HTTP on its own thread, plus static dashboard
// assets when a directory is given.
class HttpServer {
 public:
  HttpServer(HttpApi& api, std::string host, std::uint16_t port, std::string static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  HttpApi& api_;
  std::string host_;
  std::uint16_t port_;
  std::string static_dir_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace fieldcam::receiver
