#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "fieldcam/fieldcam.h"

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool json = false;
  std::string key_hex;
  std::string password;
  std::string storage;
  std::string host;
  int port = -1;
};

class CliError : public std::runtime_error {
 public:
  CliError(fc_status status, const std::string& what) : std::runtime_error(what), status(status) {}
  fc_status status;
};

void check(fc_status s, const char* what) {
  if (s != FC_OK) throw CliError(s, std::string(what) + ": " + fc_status_name(s) + ": " + fc_last_error());
}

struct CString {
  char* p = nullptr;
  ~CString() { fc_free(p); }
  std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<fc_config, decltype(&fc_config_free)>;

ConfigPtr load_config(const Options& o) {
  fc_config* raw = nullptr;
  check(fc_config_load(o.config_path.empty() ? nullptr : o.config_path.c_str(), &raw), "config");
  ConfigPtr cfg(raw, fc_config_free);
  if (!o.key_hex.empty()) check(fc_config_set_key_hex(cfg.get(), o.key_hex.c_str()), "--key");
  if (!o.password.empty()) check(fc_config_set_password(cfg.get(), o.password.c_str()), "--password");
  if (!o.storage.empty()) check(fc_config_set_storage_dir(cfg.get(), o.storage.c_str()), "--storage");
  if (o.seed_set) check(fc_config_set_seed(cfg.get(), o.seed), "--seed");
  return cfg;
}

void print(const std::string& s) { std::fputs(s.c_str(), stdout); }

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fieldcam: image capture, cellular upload and receiver toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "Seed for simulated link loss");
  app.add_flag("--json", o.json, "Emit reports as JSON");
  app.add_option("--key", o.key_hex, "AES-128 key, 32 hex characters (else FIELDCAM_AES_KEY)");

  auto* simulate = app.add_subcommand("simulate", "Run one capture-and-upload cycle on the virtual clock");
  std::string fixture;
  double loss = 0;
  int qos = -1;
  bool show_transcript = false;
  bool quiet = false;
  simulate->add_option("--fixture", fixture, "Image the camera returns")->check(CLI::ExistingFile);
  simulate->add_option("--loss", loss, "Drop probability on the modem's link")->check(CLI::Range(0.0, 0.99));
  simulate->add_option("--qos", qos, "MQTT QoS for the uploads")->check(CLI::Range(0, 2));
  simulate->add_option("--storage", o.storage, "Receiver storage directory");
  simulate->add_option("--password", o.password, "Decode the received image with this password");
  simulate->add_flag("--transcript", show_transcript, "Print the serial transcript");
  simulate->add_flag("-q,--quiet", quiet, "Skip the event log");

  auto* send = app.add_subcommand("send", "Encode a file and publish it to a broker over TCP");
  std::string send_file;
  send->add_option("file", send_file, "File to send")->required()->check(CLI::ExistingFile);
  send->add_option("--host", o.host, "Broker host");
  send->add_option("--port", o.port, "Broker port")->check(CLI::Range(1, 65535));
  send->add_option("--qos", qos, "MQTT QoS")->check(CLI::Range(0, 2));

  auto* recv = app.add_subcommand("recv", "Subscribe to a broker and serve the HTTP API until interrupted");
  int http_port = -1;
  recv->add_option("--host", o.host, "Broker host");
  recv->add_option("--port", o.port, "Broker port")->check(CLI::Range(1, 65535));
  recv->add_option("--http-port", http_port, "HTTP API port")->check(CLI::Range(0, 65535));
  recv->add_option("--storage", o.storage, "Storage directory");
  recv->add_option("--password", o.password, "Decode password (else FIELDCAM_PASSWORD)");

  auto* broker = app.add_subcommand("broker", "Run the MQTT broker on TCP until interrupted");
  std::string bind = "0.0.0.0";
  int broker_port = 1883;
  broker->add_option("--bind", bind, "Bind address");
  broker->add_option("--port", broker_port, "Listen port")->check(CLI::Range(0, 65535));

  auto* decode = app.add_subcommand("decode", "Decode a stored transmission");
  std::uint64_t decode_id = 0;
  decode->add_option("id", decode_id, "Transmission id")->required();
  decode->add_option("--password", o.password, "Decode password")->required();
  decode->add_option("--storage", o.storage, "Storage directory");

  auto* list = app.add_subcommand("list", "List stored transmissions as JSON");
  list->add_option("--storage", o.storage, "Storage directory");

  auto* report = app.add_subcommand("report", "Print the usage, timing or energy tables");
  std::string report_kind;
  report->add_option("kind", report_kind, "energy, usage or timing")
      ->required()
      ->check(CLI::IsMember({"energy", "usage", "timing"}));

  auto* dump = app.add_subcommand("config", "Print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      auto cfg = load_config(o);
      if (!fixture.empty()) check(fc_config_set_fixture(cfg.get(), fixture.c_str()), "--fixture");
      if (qos >= 0) check(fc_config_set_qos(cfg.get(), qos), "--qos");
      if (loss > 0) check(fc_config_set_loss(cfg.get(), loss), "--loss");
      if (o.password.empty()) {
        // The receiver needs some password to run; this one is never shown.
        std::random_device rd;
        const std::string throwaway = std::to_string(rd()) + std::to_string(rd());
        check(fc_config_set_password(cfg.get(), throwaway.c_str()), "password");
      }
      fc_sim* raw = nullptr;
      check(fc_sim_new(cfg.get(), &raw), "simulate");
      std::unique_ptr<fc_sim, decltype(&fc_sim_free)> sim(raw, fc_sim_free);
      fc_sim_result r{};
      check(fc_sim_transmit(sim.get(), &r), "simulate");
      CString text;
      if (show_transcript && !o.json) {
        check(fc_sim_transcript(sim.get(), &text.p), "transcript");
        print(text.str());
      } else if (!quiet && !o.json) {
        check(fc_sim_log(sim.get(), &text.p), "log");
        print(text.str());
      }
      CString timing;
      check(fc_sim_timing(sim.get(), o.json, &timing.p), "timing");
      if (!o.json) print("\n");
      print(timing.str());
      if (o.json) print("\n");
      CString records;
      check(fc_sim_records(sim.get(), &records.p), "records");
      if (!o.json) std::printf("\nreceiver records: %s\n", records.str().c_str());
      if (!o.password.empty() && r.success && r.record_id != 0) {
        CString path;
        check(fc_sim_decode(sim.get(), r.record_id, o.password.c_str(), &path.p), "decode");
        if (!o.json) std::printf("decoded image: %s\n", path.str().c_str());
      }
      if (!r.success) std::fprintf(stderr, "fieldcam: transmission failed: %s\n", r.failure);
      return r.success ? 0 : 3;
    }
    if (*send) {
      auto cfg = load_config(o);
      if (!o.host.empty() || o.port > 0)
        check(fc_config_set_broker(cfg.get(), o.host.empty() ? "127.0.0.1" : o.host.c_str(),
                                   static_cast<std::uint16_t>(o.port > 0 ? o.port : 1883)),
              "--host/--port");
      if (qos >= 0) check(fc_config_set_qos(cfg.get(), qos), "--qos");
      std::size_t publishes = 0;
      check(fc_send_file(cfg.get(), send_file.c_str(), &publishes), "send");
      std::printf("sent %s in %zu publishes\n", send_file.c_str(), publishes);
      return 0;
    }
    if (*recv) {
      auto cfg = load_config(o);
      if (!o.host.empty() || o.port > 0)
        check(fc_config_set_broker(cfg.get(), o.host.empty() ? "127.0.0.1" : o.host.c_str(),
                                   static_cast<std::uint16_t>(o.port > 0 ? o.port : 1883)),
              "--host/--port");
      if (http_port >= 0) check(fc_config_set_http(cfg.get(), "0.0.0.0", static_cast<std::uint16_t>(http_port)), "--http-port");
      fc_receiver* raw = nullptr;
      check(fc_receiver_start(cfg.get(), &raw), "recv");
      std::unique_ptr<fc_receiver, decltype(&fc_receiver_stop)> rx(raw, fc_receiver_stop);
      std::printf("receiver up, HTTP on port %u\n", fc_receiver_http_port(rx.get()));
      std::fflush(stdout);
      wait_for_signal();
      return 0;
    }
    if (*broker) {
      fc_broker* raw = nullptr;
      check(fc_broker_start(bind.c_str(), static_cast<std::uint16_t>(broker_port), &raw), "broker");
      std::unique_ptr<fc_broker, decltype(&fc_broker_stop)> b(raw, fc_broker_stop);
      std::printf("broker listening on %s:%u\n", bind.c_str(), fc_broker_port(b.get()));
      std::fflush(stdout);
      wait_for_signal();
      return 0;
    }
    if (*decode) {
      auto cfg = load_config(o);
      CString path;
      check(fc_store_decode(cfg.get(), decode_id, o.password.c_str(), &path.p), "decode");
      std::printf("%s\n", path.str().c_str());
      return 0;
    }
    if (*list) {
      auto cfg = load_config(o);
      CString text;
      check(fc_store_records(cfg.get(), &text.p), "list");
      std::printf("%s\n", text.str().c_str());
      return 0;
    }
    if (*report) {
      auto cfg = load_config(o);
      CString text;
      check(fc_report(cfg.get(), report_kind.c_str(), o.json, &text.p), "report");
      print(text.str());
      if (o.json) print("\n");
      return 0;
    }
    if (*dump) {
      auto cfg = load_config(o);
      CString text;
      check(fc_config_to_json(cfg.get(), &text.p), "config");
      std::printf("%s\n", text.str().c_str());
      return 0;
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "fieldcam: %s\n", e.what());
    return e.status == FC_ERR_AUTH_FAILED ? 4 : 1;
  }
  return 0;
}
