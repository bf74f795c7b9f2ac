#include "receiver/http_api.hpp"

#include <charconv>

#include "common/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fieldcam::receiver {

namespace {

using nlohmann::json;

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump(), {}}; }

HttpResponse error_response(int status, std::string_view message) {
  return json_response(status, json{{"error", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::AuthFailed: return 401;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::InvalidEncoding:
    case ErrorCode::TooShort:
    case ErrorCode::UnpaddedInput: return 422;
    default: return 500;
  }
}

json record_to_json(const TransmissionRecord& r) {
  return {{"id", r.id},
          {"received_at_ms", r.received_at_ms},
          {"encoded_size", r.encoded_size},
          {"status", to_string(r.status)}};
}

}  // namespace

std::string record_json(const TransmissionRecord& r) { return record_to_json(r).dump(); }

std::string records_json(const std::vector<TransmissionRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr.dump();
}

HttpResponse HttpApi::handle(const HttpRequest& req) {
  constexpr std::string_view kPrefix = "/api/transmissions/";
  constexpr std::string_view kDecode = "/decode";
  try {
    if (req.path == "/api/transmissions") {
      if (req.method != "GET") return error_response(405, "method not allowed");
      return list();
    }
    if (req.path == "/api/images/latest") {
      if (req.method != "GET") return error_response(405, "method not allowed");
      return latest_image();
    }
    if (req.path.starts_with(kPrefix) && req.path.ends_with(kDecode) &&
        req.path.size() > kPrefix.size() + kDecode.size()) {
      if (req.method != "POST") return error_response(405, "method not allowed");
      return decode(req.path.substr(kPrefix.size(), req.path.size() - kPrefix.size() - kDecode.size()), req.body);
    }
    return error_response(404, "no such route");
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  }
}

HttpResponse HttpApi::list() {
  json arr = json::array();
  for (const auto& r : service_.list()) arr.push_back(record_to_json(r));
  return json_response(200, arr);
}

HttpResponse HttpApi::decode(const std::string& id_text, const std::string& body) {
  std::uint64_t id = 0;
  const auto [p, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
  if (ec != std::errc{} || p != id_text.data() + id_text.size()) return error_response(404, "no such transmission");
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("password") || !j["password"].is_string())
    return error_response(400, "body must be {\"password\": \"...\"}");
  return json_response(200, record_to_json(service_.decode(id, j["password"].get<std::string>())));
}

HttpResponse HttpApi::latest_image() {
  auto image = service_.latest_image();
  if (!image) return error_response(404, "no decoded image yet");
  HttpResponse r{200, "image/jpeg", fieldcam::to_string(*image), {}};
  r.headers = {{"Cache-Control", "no-store, no-cache, must-revalidate, max-age=0"},
               {"Pragma", "no-cache"},
               {"Expires", "0"}};
  return r;
}

HttpServer::HttpServer(HttpApi& api, std::string host, std::uint16_t port, std::string static_dir)
    : api_(api), host_(std::move(host)), port_(port), static_dir_(std::move(static_dir)) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  server_ = std::make_unique<httplib::Server>();
  auto forward = [this](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req{in.method, in.path, {}, in.body};
    for (const auto& [k, v] : in.params) req.query[k] = v;
    const HttpResponse res = api_.handle(req);
    out.status = res.status;
    for (const auto& [k, v] : res.headers) out.set_header(k, v);
    out.set_content(res.body, res.content_type);
  };
  server_->Get(R"(/api/.*)", forward);
  server_->Post(R"(/api/.*)", forward);
  if (!static_dir_.empty() && !server_->set_mount_point("/", static_dir_))
    fail(ErrorCode::Config, "dashboard directory not found: " + static_dir_);

  if (port_ == 0) {
    const int bound = server_->bind_to_any_port(host_);
    if (bound <= 0) fail(ErrorCode::Network, "cannot bind HTTP server on " + host_);
    port_ = static_cast<std::uint16_t>(bound);
  } else if (!server_->bind_to_port(host_, port_)) {
    fail(ErrorCode::Network, "cannot bind HTTP server on " + host_ + ":" + std::to_string(port_));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

}  // namespace fieldcam::receiver
