#include "config/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "common/error.hpp"

namespace fieldcam::config {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::Config, name_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.contains(k)) fail(ErrorCode::Config, "unknown key " + name_ + "." + k);
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::Config, "wrong type for " + name_ + "." + key);
    }
  }
  void ms(const char* key, Duration& out) {
    std::int64_t v = out.count() / 1000;
    get(key, v);
    out = std::chrono::milliseconds(v);
  }
  void path(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }
  template <typename Fn>
  void child(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Section s(j_.at(key), name_ + "." + key);
    fn(s);
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_net(Section& s, mqtt::NetConditions& n) {
  s.get("drop_probability", n.drop_probability);
  s.ms("latency_ms", n.latency);
  s.get("rng_seed", n.rng_seed);
}

json net_json(const mqtt::NetConditions& n) {
  return {{"drop_probability", n.drop_probability},
          {"latency_ms", n.latency.count() / 1000},
          {"rng_seed", n.rng_seed}};
}

std::int64_t ms_of(Duration d) { return d.count() / 1000; }

}  // namespace

void AppConfig::set_key_hex(std::string_view hex) {
  const auto cipher = pipeline::CipherConfig::from_hex(hex);
  device.cipher = cipher;
  receiver.cipher = cipher;
  has_key = true;
}

AppConfig from_json(const json& j) {
  AppConfig c;
  std::string key;
  {
    Section root(j, "config");
    root.get("seed", c.seed);
    root.get("aes_key_hex", key);
    root.child("device", [&](Section& s) {
      auto& d = c.device;
      s.get("fixture_path", d.camera.fixture_path);
      s.get("width", d.camera.width);
      s.get("height", d.camera.height);
      s.get("quality", d.camera.quality);
      s.get("strict_jpeg", d.camera.strict_jpeg);
      s.get("connect_id", d.fsm.connect_id);
      s.get("client_id", d.fsm.client_id);
      s.get("host", d.fsm.host);
      s.get("port", d.fsm.port);
      s.get("topic", d.fsm.topic);
      s.get("qos", d.fsm.qos);
      s.get("segment_size", d.fsm.segment_size);
      s.get("max_open_retries", d.fsm.max_open_retries);
      s.get("max_conn_retries", d.fsm.max_conn_retries);
      s.get("newline_terminated", d.newline_terminated);
    });
    root.child("timing", [&](Section& s) {
      auto& t = c.device.timing;
      s.ms("rdy_wait_ms", t.rdy_wait);
      s.ms("csq_wait_ms", t.csq_wait);
      s.ms("qmtopen_wait_ms", t.qmtopen_wait);
      s.ms("qmtconn_wait_ms", t.qmtconn_wait);
      s.ms("qmtconn_query_wait_ms", t.qmtconn_query_wait);
      s.ms("qmtpub_wait_ms", t.qmtpub_wait);
      s.ms("prompt_wait_ms", t.prompt_wait);
      s.ms("qlts_wait_ms", t.qlts_wait);
      s.get("baud", t.baud);
      s.ms("loop_tick_ms", t.loop_tick);
      s.ms("max_duration_ms", t.max_duration);
    });
    root.child("signal", [&](Section& s) {
      s.ms("attach_delay_ms", c.modem.signal.attach_delay);
      s.get("csq_when_registered", c.modem.signal.csq_when_registered);
    });
    root.child("modem", [&](Section& s) {
      auto& m = c.modem;
      s.ms("rdy_delay_ms", m.rdy_delay);
      s.ms("command_latency_ms", m.command_latency);
      s.ms("qmtopen_latency_ms", m.qmtopen_latency);
      s.ms("prompt_latency_ms", m.prompt_latency);
      s.ms("qmtpub_latency_ms", m.qmtpub_latency);
      s.get("tz_quarter_hours", m.tz_quarter_hours);
      s.child("uplink", [&](Section& n) { read_net(n, m.uplink); });
      s.child("downlink", [&](Section& n) { read_net(n, m.downlink); });
    });
    root.child("receiver", [&](Section& s) {
      auto& r = c.receiver;
      s.get("topic", r.topic);
      s.get("password", r.password);
      s.path("storage_dir", r.storage_dir);
      s.get("broker_host", r.broker_host);
      s.get("broker_port", r.broker_port);
      s.get("client_id", r.client_id);
      s.get("http_host", r.http_host);
      s.get("http_port", r.http_port);
      s.get("static_dir", r.static_dir);
      s.ms("initial_backoff_ms", r.initial_backoff);
      s.ms("max_backoff_ms", r.max_backoff);
    });
    root.child("energy", [&](Section& s) {
      auto& e = c.energy;
      s.get("active_current", e.active_current);
      s.get("quiescent_current", e.quiescent_current);
      s.get("runs_per_hour", e.runs_per_hour);
      s.get("run_duration", e.run_duration);
      s.get("supply_voltage", e.supply_voltage);
    });
    root.child("battery", [&](Section& s) {
      auto& b = c.battery;
      s.get("capacity_mah", b.capacity_mah);
      s.get("nominal_voltage", b.nominal_voltage);
      s.get("converter_efficiency", b.converter_efficiency);
    });
  }
  c.device.power = {c.energy.quiescent_current, c.energy.active_current};
  if (!key.empty()) {
    try {
      c.set_key_hex(key);
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string("aes_key_hex: ") + e.what());
    }
  }
  try {
    c.device.timing.validate();
    c.modem.validate();
    c.energy.validate();
    c.battery.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  return c;
}

AppConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void apply_environment(AppConfig& cfg) {
  if (const char* key = std::getenv(kKeyEnv); key && *key) {
    try {
      cfg.set_key_hex(key);
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string(kKeyEnv) + ": " + e.what());
    }
  }
  if (const char* pw = std::getenv(kPasswordEnv); pw && *pw) cfg.receiver.password = pw;
}

json to_json(const AppConfig& c) {
  const auto& d = c.device;
  const auto& t = d.timing;
  const auto& m = c.modem;
  const auto& r = c.receiver;
  return {
      {"seed", c.seed},
      {"device",
       {{"fixture_path", d.camera.fixture_path},
        {"width", d.camera.width},
        {"height", d.camera.height},
        {"quality", d.camera.quality},
        {"strict_jpeg", d.camera.strict_jpeg},
        {"connect_id", d.fsm.connect_id},
        {"client_id", d.fsm.client_id},
        {"host", d.fsm.host},
        {"port", d.fsm.port},
        {"topic", d.fsm.topic},
        {"qos", d.fsm.qos},
        {"segment_size", d.fsm.segment_size},
        {"max_open_retries", d.fsm.max_open_retries},
        {"max_conn_retries", d.fsm.max_conn_retries},
        {"newline_terminated", d.newline_terminated}}},
      {"timing",
       {{"rdy_wait_ms", ms_of(t.rdy_wait)},
        {"csq_wait_ms", ms_of(t.csq_wait)},
        {"qmtopen_wait_ms", ms_of(t.qmtopen_wait)},
        {"qmtconn_wait_ms", ms_of(t.qmtconn_wait)},
        {"qmtconn_query_wait_ms", ms_of(t.qmtconn_query_wait)},
        {"qmtpub_wait_ms", ms_of(t.qmtpub_wait)},
        {"prompt_wait_ms", ms_of(t.prompt_wait)},
        {"qlts_wait_ms", ms_of(t.qlts_wait)},
        {"baud", t.baud},
        {"loop_tick_ms", ms_of(t.loop_tick)},
        {"max_duration_ms", ms_of(t.max_duration)}}},
      {"signal",
       {{"attach_delay_ms", ms_of(m.signal.attach_delay)},
        {"csq_when_registered", m.signal.csq_when_registered}}},
      {"modem",
       {{"rdy_delay_ms", ms_of(m.rdy_delay)},
        {"command_latency_ms", ms_of(m.command_latency)},
        {"qmtopen_latency_ms", ms_of(m.qmtopen_latency)},
        {"prompt_latency_ms", ms_of(m.prompt_latency)},
        {"qmtpub_latency_ms", ms_of(m.qmtpub_latency)},
        {"tz_quarter_hours", m.tz_quarter_hours},
        {"uplink", net_json(m.uplink)},
        {"downlink", net_json(m.downlink)}}},
      {"receiver",
       {{"topic", r.topic},
        {"storage_dir", r.storage_dir.string()},
        {"broker_host", r.broker_host},
        {"broker_port", r.broker_port},
        {"client_id", r.client_id},
        {"http_host", r.http_host},
        {"http_port", r.http_port},
        {"static_dir", r.static_dir},
        {"initial_backoff_ms", ms_of(r.initial_backoff)},
        {"max_backoff_ms", ms_of(r.max_backoff)}}},
      {"energy",
       {{"active_current", c.energy.active_current},
        {"quiescent_current", c.energy.quiescent_current},
        {"runs_per_hour", c.energy.runs_per_hour},
        {"run_duration", c.energy.run_duration},
        {"supply_voltage", c.energy.supply_voltage}}},
      {"battery",
       {{"capacity_mah", c.battery.capacity_mah},
        {"nominal_voltage", c.battery.nominal_voltage},
        {"converter_efficiency", c.battery.converter_efficiency}}},
  };
}

}  // namespace fieldcam::config
