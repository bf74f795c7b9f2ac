#include "fieldcam/fieldcam.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "common/error.hpp"
#include "config/config.hpp"
#include "device/tcp_upload.hpp"
#include "metrics/report.hpp"
#include "mqtt/tcp.hpp"
#include "receiver/http_api.hpp"
#include "receiver/runner.hpp"
#include "sim/rig.hpp"

using namespace fieldcam;

struct fc_config {
  config::AppConfig cfg;
};

struct fc_sim {
  std::unique_ptr<sim::SimRig> rig;
  std::optional<device::TransmissionTrace> last;
};

struct fc_broker {
  std::unique_ptr<mqtt::TcpBroker> broker;
};

struct fc_receiver {
  std::unique_ptr<receiver::ReceiverRunner> runner;
};

namespace {

thread_local std::string g_last_error;

static_assert(static_cast<int>(ErrorCode::Network) + 1 == FC_ERR_NETWORK);

fc_status to_status(ErrorCode code) { return static_cast<fc_status>(static_cast<int>(code) + 1); }

template <typename Fn>
fc_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

receiver::ReceiverConfig receiver_config(const config::AppConfig& c) {
  if (!c.has_key) fail(ErrorCode::Config, "no AES key configured");
  return c.receiver;
}

}  // namespace

extern "C" {

const char* fc_status_name(fc_status status) {
  if (status == FC_OK) return "ok";
  if (status == FC_ERR_INTERNAL) return "internal";
  static const char* const kNames[] = {
      "invalid_argument", "empty_file", "unpadded_input", "invalid_encoding", "too_short",
      "exceeds_modem_limit", "malformed_header", "malformed_packet", "length_overflow",
      "protocol_violation", "already_powered", "powered_off", "capture_failed",
      "inconsistent_totals", "division_by_zero", "auth_failed", "not_found", "conflict", "io",
      "config", "network"};
  const int i = static_cast<int>(status) - 1;
  if (i < 0 || i >= static_cast<int>(std::size(kNames))) return "unknown";
  return kNames[i];
}

const char* fc_last_error(void) { return g_last_error.c_str(); }

void fc_free(void* p) { std::free(p); }

fc_status fc_config_new(fc_config** out) {
  return guard([&] {
    require(out, "out is null");
    *out = new fc_config{};
  });
}

fc_status fc_config_load(const char* path, fc_config** out) {
  return guard([&] {
    require(out, "out is null");
    auto c = std::make_unique<fc_config>();
    if (path) c->cfg = config::load(path);
    config::apply_environment(c->cfg);
    *out = c.release();
  });
}

void fc_config_free(fc_config* cfg) { delete cfg; }

fc_status fc_config_set_key_hex(fc_config* cfg, const char* hex) {
  return guard([&] {
    require(cfg && hex, "null argument");
    cfg->cfg.set_key_hex(hex);
  });
}

fc_status fc_config_set_fixture(fc_config* cfg, const char* path) {
  return guard([&] {
    require(cfg && path, "null argument");
    cfg->cfg.device.camera.fixture_path = path;
  });
}

fc_status fc_config_set_storage_dir(fc_config* cfg, const char* dir) {
  return guard([&] {
    require(cfg && dir && *dir, "storage dir is empty");
    cfg->cfg.receiver.storage_dir = dir;
  });
}

fc_status fc_config_set_password(fc_config* cfg, const char* password) {
  return guard([&] {
    require(cfg && password, "null argument");
    cfg->cfg.receiver.password = password;
  });
}

fc_status fc_config_set_broker(fc_config* cfg, const char* host, uint16_t port) {
  return guard([&] {
    require(cfg && host && *host, "broker host is empty");
    cfg->cfg.receiver.broker_host = host;
    cfg->cfg.receiver.broker_port = port;
  });
}

fc_status fc_config_set_http(fc_config* cfg, const char* host, uint16_t port) {
  return guard([&] {
    require(cfg && host && *host, "http host is empty");
    cfg->cfg.receiver.http_host = host;
    cfg->cfg.receiver.http_port = port;
  });
}

fc_status fc_config_set_qos(fc_config* cfg, int qos) {
  return guard([&] {
    require(cfg, "null argument");
    require(qos >= 0 && qos <= 2, "qos must be 0, 1 or 2");
    cfg->cfg.device.fsm.qos = qos;
  });
}

fc_status fc_config_set_seed(fc_config* cfg, uint64_t seed) {
  return guard([&] {
    require(cfg, "null argument");
    cfg->cfg.seed = seed;
  });
}

fc_status fc_config_set_loss(fc_config* cfg, double drop_probability) {
  return guard([&] {
    require(cfg, "null argument");
    require(drop_probability >= 0 && drop_probability < 1, "drop probability must be in [0, 1)");
    cfg->cfg.modem.uplink.drop_probability = drop_probability;
    cfg->cfg.modem.downlink.drop_probability = drop_probability;
  });
}

fc_status fc_config_get_seed(const fc_config* cfg, uint64_t* out) {
  return guard([&] {
    require(cfg && out, "null argument");
    *out = cfg->cfg.seed;
  });
}

fc_status fc_config_to_json(const fc_config* cfg, char** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    *out = dup_string(config::to_json(cfg->cfg).dump(2));
  });
}

fc_status fc_encode(const fc_config* cfg, const uint8_t* raw, size_t raw_len, char** out,
                    size_t* out_len) {
  return guard([&] {
    require(cfg && out && (raw || raw_len == 0), "null argument");
    if (!cfg->cfg.has_key) fail(ErrorCode::Config, "no AES key configured");
    const auto text = pipeline::encode_pipeline(pipeline::RawFile::from(Bytes(raw, raw + raw_len)),
                                                cfg->cfg.device.cipher);
    *out = dup_string(text);
    if (out_len) *out_len = text.size();
  });
}

fc_status fc_decode(const fc_config* cfg, const char* encoded, size_t encoded_len, uint8_t** out,
                    size_t* out_len) {
  return guard([&] {
    require(cfg && out && out_len && (encoded || encoded_len == 0), "null argument");
    if (!cfg->cfg.has_key) fail(ErrorCode::Config, "no AES key configured");
    const Bytes plain =
        pipeline::decode_pipeline(std::string_view(encoded, encoded_len), cfg->cfg.receiver.cipher);
    auto* p = static_cast<uint8_t*>(std::malloc(plain.empty() ? 1 : plain.size()));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, plain.data(), plain.size());
    *out = p;
    *out_len = plain.size();
  });
}

fc_status fc_report(const fc_config* cfg, const char* kind, int as_json, char** out) {
  return guard([&] {
    require(cfg && kind && out, "null argument");
    const auto& c = cfg->cfg;
    const std::string k = kind;
    metrics::Report r;
    if (k == "energy") {
      r = metrics::energy_report(c.energy, c.battery);
    } else if (k == "usage") {
      metrics::OverheadModel m;
      m.client_id = c.device.fsm.client_id;
      m.topic = c.device.fsm.topic;
      m.segment_size = c.device.fsm.segment_size;
      r = metrics::usage_report(metrics::kReferencePayloadBytes, metrics::kReferenceCarrierBytes,
                                metrics::kReferencePayloadBytes, m);
    } else if (k == "timing") {
      r = metrics::timing_report(metrics::transfer_breakdown(
          metrics::kReferencePayloadBytes, c.device.timing, c.modem.signal, c.device.fsm.segment_size));
    } else {
      fail(ErrorCode::InvalidArgument, "unknown report " + k);
    }
    *out = dup_string(as_json ? r.json().dump(2) : r.text());
  });
}

fc_status fc_sim_new(const fc_config* cfg, fc_sim** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    const auto& c = cfg->cfg;
    if (!c.has_key) fail(ErrorCode::Config, "no AES key configured");
    if (c.device.camera.fixture_path.empty()) fail(ErrorCode::Config, "no fixture image configured");
    sim::RigConfig rc;
    rc.device = c.device;
    rc.modem = c.modem;
    rc.modem.uplink.rng_seed = c.seed;
    rc.modem.downlink.rng_seed = c.seed ^ 0x9e3779b97f4a7c15ull;
    rc.receiver = c.receiver;
    rc.with_receiver = !c.receiver.password.empty();
    auto s = std::make_unique<fc_sim>();
    s->rig = std::make_unique<sim::SimRig>(std::move(rc));
    *out = s.release();
  });
}

void fc_sim_free(fc_sim* sim) { delete sim; }

fc_status fc_sim_transmit(fc_sim* sim, fc_sim_result* out) {
  return guard([&] {
    require(sim && out, "null argument");
    auto* svc = sim->rig->receiver();
    const auto before = svc ? svc->list() : std::vector<receiver::TransmissionRecord>{};
    const std::uint64_t last_id = before.empty() ? 0 : before.back().id;
    sim->last = sim->rig->transmit();
    const auto& tr = *sim->last;
    const auto& cfg = sim->rig->config().device;
    const auto p = tr.phases(cfg.timing);
    fc_sim_result r{};
    r.success = tr.success ? 1 : 0;
    r.raw_size = tr.raw_size;
    r.encoded_size = tr.encoded_size;
    r.publishes = tr.publishes.size();
    if (tr.plan) {
      r.segment_count = tr.plan->segment_count;
      r.segment_size = tr.plan->segment_size;
      r.last_segment_size = tr.plan->last_segment_size;
    }
    r.pre_upload_ms = to_ms(p.pre_upload);
    r.upload_ms = to_ms(p.upload);
    r.publish_wait_ms = to_ms(p.publish_wait);
    r.payload_serial_ms = to_ms(p.payload_serial);
    r.total_ms = to_ms(p.total);
    r.charge_coulombs = device::energy_of_trace(tr, cfg.power, tr.powered_off - tr.powered_on).charge_coulombs;
    if (svc) {
      const auto after = svc->list();
      if (!after.empty() && after.back().id > last_id) r.record_id = after.back().id;
    }
    std::snprintf(r.failure, sizeof r.failure, "%s", tr.failure.c_str());
    *out = r;
  });
}

fc_status fc_sim_log(const fc_sim* sim, char** out) {
  return guard([&] {
    require(sim && out, "null argument");
    if (!sim->last) fail(ErrorCode::NotFound, "no transmission yet");
    *out = dup_string(sim->last->render_log());
  });
}

fc_status fc_sim_transcript(const fc_sim* sim, char** out) {
  return guard([&] {
    require(sim && out, "null argument");
    if (!sim->last) fail(ErrorCode::NotFound, "no transmission yet");
    std::string text;
    for (const auto& e : sim->last->serial) text += modem::render_entry(e) + "\n";
    *out = dup_string(text);
  });
}

fc_status fc_sim_timing(const fc_sim* sim, int as_json, char** out) {
  return guard([&] {
    require(sim && out, "null argument");
    if (!sim->last) fail(ErrorCode::NotFound, "no transmission yet");
    const auto r = metrics::simulated_timing_report(*sim->last, sim->rig->config().device.timing);
    *out = dup_string(as_json ? r.json().dump(2) : r.text());
  });
}

fc_status fc_sim_records(const fc_sim* sim, char** out) {
  return guard([&] {
    require(sim && out, "null argument");
    auto* svc = sim->rig->receiver();
    *out = dup_string(receiver::records_json(svc ? svc->list() : std::vector<receiver::TransmissionRecord>{}));
  });
}

fc_status fc_sim_decode(fc_sim* sim, uint64_t id, const char* password, char** out_path) {
  return guard([&] {
    require(sim && password && out_path, "null argument");
    auto* svc = sim->rig->receiver();
    if (!svc) fail(ErrorCode::NotFound, "simulation has no receiver");
    *out_path = dup_string(svc->decode(id, password).decoded_path);
  });
}

fc_status fc_broker_start(const char* host, uint16_t port, fc_broker** out) {
  return guard([&] {
    require(host && out, "null argument");
    auto b = std::make_unique<fc_broker>();
    b->broker = std::make_unique<mqtt::TcpBroker>(host, port);
    b->broker->start();
    *out = b.release();
  });
}

uint16_t fc_broker_port(const fc_broker* broker) { return broker ? broker->broker->port() : 0; }

void fc_broker_stop(fc_broker* broker) {
  if (!broker) return;
  try {
    broker->broker->stop();
  } catch (...) {
  }
  delete broker;
}

fc_status fc_receiver_start(const fc_config* cfg, fc_receiver** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    auto r = std::make_unique<fc_receiver>();
    r->runner = std::make_unique<receiver::ReceiverRunner>(receiver_config(cfg->cfg));
    r->runner->start();
    *out = r.release();
  });
}

uint16_t fc_receiver_http_port(const fc_receiver* receiver) {
  return receiver ? receiver->runner->http_port() : 0;
}

int fc_receiver_wait_subscribed(fc_receiver* receiver, uint32_t timeout_ms) {
  if (!receiver) return 0;
  return receiver->runner->wait_subscribed(std::chrono::milliseconds(timeout_ms)) ? 1 : 0;
}

uint64_t fc_receiver_messages(const fc_receiver* receiver) {
  return receiver ? receiver->runner->messages() : 0;
}

fc_status fc_receiver_records(const fc_receiver* receiver, char** out) {
  return guard([&] {
    require(receiver && out, "null argument");
    *out = dup_string(receiver::records_json(receiver->runner->service().list()));
  });
}

void fc_receiver_stop(fc_receiver* receiver) {
  if (!receiver) return;
  try {
    receiver->runner->stop();
  } catch (...) {
  }
  delete receiver;
}

fc_status fc_send_file(const fc_config* cfg, const char* path, size_t* out_publishes) {
  return guard([&] {
    require(cfg && path, "null argument");
    if (!cfg->cfg.has_key) fail(ErrorCode::Config, "no AES key configured");
    const auto r = device::upload_over_tcp(read_file(path), cfg->cfg.device, cfg->cfg.receiver.broker_host,
                                           cfg->cfg.receiver.broker_port);
    if (out_publishes) *out_publishes = r.publishes;
  });
}

fc_status fc_store_decode(const fc_config* cfg, uint64_t id, const char* password, char** out_path) {
  return guard([&] {
    require(cfg && password && out_path, "null argument");
    receiver::ReceiverService svc(receiver_config(cfg->cfg), wall_ms);
    *out_path = dup_string(svc.decode(id, password).decoded_path);
  });
}

fc_status fc_store_records(const fc_config* cfg, char** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    receiver::RecordStore store(cfg->cfg.receiver.storage_dir);
    *out = dup_string(receiver::records_json(store.list()));
  });
}

}  // extern "C"
