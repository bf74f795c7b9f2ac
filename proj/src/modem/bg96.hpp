#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common/bytes.hpp"
#include "common/sim_time.hpp"
#include "modem/transcript.hpp"
#include "mqtt/event_queue.hpp"
#include "mqtt/net.hpp"
#include "mqtt/sim_network.hpp"

namespace fieldcam::modem {

inline constexpr std::size_t kMaxPublishPayload = 1548;
inline constexpr int kMaxConnectId = 5;
inline constexpr char kCtrlZ = 0x1A;

struct SignalProfile {
  Duration attach_delay = 13s;  // measured from power-on
  int csq_when_registered = 21;
};

// Maximum response times from the modem's AT manual.
struct MrtTable {
  Duration csq = 300ms;
  Duration qmtopen = 75s;
  Duration qmtconn = 75s;
  Duration qmtpub = 15s;
  Duration qlts = 300ms;
};

struct ModemConfig {
  SignalProfile signal;
  MrtTable mrt;
  Duration rdy_delay = 1500ms;
  Duration command_latency = 10ms;   // plain OK/ERROR and query replies
  Duration qmtopen_latency = 600ms;  // OK to +QMTOPEN URC
  Duration prompt_latency = 2ms;     // QMTPUB line to '>'
  Duration qmtpub_latency = 100ms;   // terminator to +QMTPUB URC at QoS 0
  // Network time reported by +QLTS at power-on.
  std::chrono::sys_seconds network_epoch =
      std::chrono::sys_days{std::chrono::year{2024} / 1 / 2} + std::chrono::hours{3} +
      std::chrono::minutes{4} + std::chrono::seconds{5};
  int tz_quarter_hours = 40;  // UTC+10
  mqtt::NetConditions uplink{};
  mqtt::NetConditions downlink{};

  // Throws InvalidArgument if any latency exceeds its command's MRT.
  void validate() const;
};

enum class LinkState { Closed, Opened, Connecting, Connected };

struct ResponseTiming {
  std::string command;
  SimTime issued;
  SimTime responded;
};

// BG96-class LTE modem on an in-memory serial line. Commands are
// "\r"-terminated; responses are "\r\n"-delimited. Responses and URCs are
// scheduled on the shared event queue, and poll_serial drains whatever has
// been emitted up to the requested time.
class Bg96Modem {
 public:
  Bg96Modem(ModemConfig config, mqtt::SimNetwork& net);
  ~Bg96Modem();
  Bg96Modem(const Bg96Modem&) = delete;
  Bg96Modem& operator=(const Bg96Modem&) = delete;

  void power_on(SimTime t);
  void power_off(SimTime t);
  bool powered() const { return powered_at_.has_value(); }
  bool registered(SimTime t) const;

  // Advance the queue to t, then consume bytes from the host.
  void feed_serial(std::string_view bytes, SimTime t);
  // Consume bytes at the current queue time without advancing it. For use
  // from inside queue events.
  void receive(std::string_view bytes);
  std::string poll_serial(SimTime t);

  LinkState link_state(int connect_id) const;
  bool in_data_mode() const { return data_mode_.has_value(); }
  bool echo_enabled() const { return echo_; }

  const Transcript& transcript() const { return transcript_; }
  Transcript& transcript() { return transcript_; }
  const std::vector<ResponseTiming>& response_timings() const { return timings_; }
  // Payloads handed to the MQTT client, in order.
  const std::vector<Bytes>& published() const { return published_; }
  const ModemConfig& config() const { return config_; }
  mqtt::EventQueue& queue() { return queue_; }

 private:
  struct Link {
    LinkState state = LinkState::Closed;
    std::unique_ptr<mqtt::SimClient> client;
    std::map<std::uint16_t, int> msgid_by_packet;
  };
  struct DataMode {
    int connect_id;
    int msgid;
    mqtt::QoS qos;
    bool retain;
    std::string topic;
    std::string payload;
    SimTime issued;
  };

  SimTime now() const { return queue_.now(); }
  void emit(std::string text);
  void emit_in(Duration delay, std::string text);
  void respond_in(Duration delay, std::string command, SimTime issued, std::string text);
  void handle_line(const std::string& line);
  void finish_data_mode();

  void cmd_csq();
  void cmd_qmtopen(std::string_view args);
  void cmd_qmtconn(std::string_view args);
  void cmd_qmtconn_query();
  void cmd_qmtpub(std::string_view args);
  void cmd_qmtclose(std::string_view args);
  void cmd_qlts();
  void on_link_closed(int connect_id);

  ModemConfig config_;
  mqtt::SimNetwork& net_;
  mqtt::EventQueue& queue_;
  std::optional<SimTime> powered_at_;
  bool echo_ = true;
  std::uint64_t generation_ = 0;  // bumps on power cycle to cancel queued output
  std::string line_;
  std::optional<DataMode> data_mode_;
  bool swallow_cr_ = false;
  std::string out_;
  std::map<int, Link> links_;
  Transcript transcript_;
  std::vector<ResponseTiming> timings_;
  std::vector<Bytes> published_;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

// Splits an AT argument list on commas outside double quotes and strips the
// quotes.
std::vector<std::string> split_at_args(std::string_view args);

// '+QLTS: "yy/MM/dd,hh:mm:ss+zz"' for the given instant.
std::string format_qlts(std::chrono::sys_seconds at, int tz_quarter_hours);

}  // namespace fieldcam::modem
