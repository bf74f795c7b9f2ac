#include "modem/bg96.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>

#include "common/error.hpp"

namespace fieldcam::modem {

namespace {

constexpr std::string_view kOk = "\r\nOK\r\n";
constexpr std::string_view kError = "\r\nERROR\r\n";

std::string info(std::string_view body) { return fmt::format("\r\n{}\r\n\r\nOK\r\n", body); }
std::string urc(std::string_view body) { return fmt::format("\r\n{}\r\n", body); }

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

int conn_state_code(LinkState s) {
  switch (s) {
    case LinkState::Opened: return 1;
    case LinkState::Connecting: return 2;
    case LinkState::Connected: return 3;
    case LinkState::Closed: break;
  }
  return 0;
}

}  // namespace

void ModemConfig::validate() const {
  auto check = [](Duration latency, Duration mrt, const char* what) {
    if (latency < 0us || latency > mrt)
      fail(ErrorCode::InvalidArgument, fmt::format("{} latency exceeds its maximum response time", what));
  };
  check(command_latency, mrt.csq, "CSQ");
  check(command_latency, mrt.qlts, "QLTS");
  check(qmtopen_latency, mrt.qmtopen, "QMTOPEN");
  check(prompt_latency + qmtpub_latency, mrt.qmtpub, "QMTPUB");
  if (signal.csq_when_registered < 0 || signal.csq_when_registered > 31)
    fail(ErrorCode::InvalidArgument, "csq_when_registered must be in 0..31");
  if (signal.attach_delay < 0us) fail(ErrorCode::InvalidArgument, "attach_delay must be >= 0");
  if (rdy_delay < 0us) fail(ErrorCode::InvalidArgument, "rdy_delay must be >= 0");
}

std::vector<std::string> split_at_args(std::string_view args) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (const char c : args) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string format_qlts(std::chrono::sys_seconds at, int tz_quarter_hours) {
  using namespace std::chrono;
  const auto day = floor<days>(at);
  const year_month_day ymd{day};
  const hh_mm_ss hms{at - day};
  return fmt::format("+QLTS: \"{:02}/{:02}/{:02},{:02}:{:02}:{:02}{}{:02}\"",
                     static_cast<int>(ymd.year()) % 100, static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hms.hours().count(), hms.minutes().count(),
                     hms.seconds().count(), tz_quarter_hours < 0 ? '-' : '+',
                     std::abs(tz_quarter_hours));
}

Bg96Modem::Bg96Modem(ModemConfig config, mqtt::SimNetwork& net)
    : config_(std::move(config)), net_(net), queue_(net.queue()) {
  config_.validate();
}

Bg96Modem::~Bg96Modem() { *alive_ = false; }

bool Bg96Modem::registered(SimTime t) const {
  return powered_at_ && t - *powered_at_ >= config_.signal.attach_delay;
}

LinkState Bg96Modem::link_state(int connect_id) const {
  const auto it = links_.find(connect_id);
  return it == links_.end() ? LinkState::Closed : it->second.state;
}

void Bg96Modem::power_on(SimTime t) {
  if (powered_at_) fail(ErrorCode::AlreadyPowered, "modem is already powered");
  if (t > queue_.now()) queue_.run_until(t);
  powered_at_ = t;
  echo_ = true;
  emit_in(config_.rdy_delay, "RDY\r\n");
}

void Bg96Modem::power_off(SimTime t) {
  if (t > queue_.now()) queue_.run_until(t);
  ++generation_;
  powered_at_.reset();
  links_.clear();
  line_.clear();
  data_mode_.reset();
  swallow_cr_ = false;
  out_.clear();
}

void Bg96Modem::emit(std::string text) {
  transcript_.add(now(), Flow::Rx, text);
  out_ += text;
}

void Bg96Modem::emit_in(Duration delay, std::string text) {
  std::weak_ptr<bool> alive = alive_;
  const auto gen = generation_;
  queue_.schedule_in(delay, [this, alive, gen, text = std::move(text)](SimTime) mutable {
    const auto a = alive.lock();
    if (!a || !*a || gen != generation_) return;
    emit(std::move(text));
  });
}

void Bg96Modem::respond_in(Duration delay, std::string command, SimTime issued, std::string text) {
  timings_.push_back({std::move(command), issued, now() + delay});
  emit_in(delay, std::move(text));
}

std::string Bg96Modem::poll_serial(SimTime t) {
  queue_.run_until(t);
  return std::exchange(out_, {});
}

void Bg96Modem::feed_serial(std::string_view bytes, SimTime t) {
  queue_.run_until(t);
  receive(bytes);
}

void Bg96Modem::receive(std::string_view bytes) {
  if (!powered_at_) return;  // line is dead
  std::string chunk;
  bool chunk_is_data = false;
  auto flush = [&] {
    transcript_.add(now(), Flow::Tx, std::exchange(chunk, {}), chunk_is_data);
  };
  auto append = [&](char c, bool data) {
    if (data != chunk_is_data && !chunk.empty()) flush();
    chunk_is_data = data;
    chunk += c;
  };

  for (const char c : bytes) {
    if (data_mode_) {
      if (c == kCtrlZ) {
        append(c, false);
        swallow_cr_ = true;
        finish_data_mode();
      } else {
        append(c, true);
        data_mode_->payload += c;
      }
      continue;
    }
    append(c, false);
    if (swallow_cr_) {
      swallow_cr_ = false;
      if (c == '\r') continue;
    }
    if (c == '\n') continue;
    if (c != '\r') {
      line_ += c;
      continue;
    }
    std::string line = std::exchange(line_, {});
    flush();
    if (echo_) emit(line + "\r");
    handle_line(line);
  }
  if (!chunk.empty()) flush();
}

void Bg96Modem::handle_line(const std::string& raw) {
  const std::string line = upper(raw);
  if (line.empty()) return;
  if (line.rfind("AT", 0) != 0) {
    emit_in(config_.command_latency, std::string(kError));
    return;
  }
  const std::string_view cmd = std::string_view(line).substr(2);
  // Arguments keep their original case (client ids, topics, hosts).
  const std::string_view args_raw = std::string_view(raw).substr(std::min(raw.size(), raw.find('=') + 1));

  if (cmd.empty()) {
    emit_in(config_.command_latency, std::string(kOk));
  } else if (cmd == "E0" || cmd == "E1") {
    echo_ = cmd == "E1";
    emit_in(config_.command_latency, std::string(kOk));
  } else if (cmd == "+CSQ") {
    cmd_csq();
  } else if (cmd.starts_with("+QMTOPEN=")) {
    cmd_qmtopen(args_raw);
  } else if (cmd == "+QMTCONN?") {
    cmd_qmtconn_query();
  } else if (cmd.starts_with("+QMTCONN=")) {
    cmd_qmtconn(args_raw);
  } else if (cmd.starts_with("+QMTPUB=")) {
    cmd_qmtpub(args_raw);
  } else if (cmd.starts_with("+QMTCLOSE=")) {
    cmd_qmtclose(args_raw);
  } else if (cmd == "+QLTS" || cmd.starts_with("+QLTS=")) {
    const auto mode = cmd == "+QLTS" ? std::optional<int>(0) : to_int(cmd.substr(6));
    if (!mode || *mode < 0 || *mode > 2)
      emit_in(config_.command_latency, std::string(kError));
    else
      cmd_qlts();
  } else {
    emit_in(config_.command_latency, std::string(kError));
  }
}

void Bg96Modem::cmd_csq() {
  const bool reg = registered(now());
  const std::string body =
      reg ? fmt::format("+CSQ: {},0", config_.signal.csq_when_registered) : std::string("+CSQ: 99,99");
  respond_in(config_.command_latency, "CSQ", now(), info(body));
}

void Bg96Modem::cmd_qmtopen(std::string_view args) {
  const auto a = split_at_args(args);
  const auto id = a.size() == 3 ? to_int(a[0]) : std::nullopt;
  const auto port = a.size() == 3 ? to_int(a[2]) : std::nullopt;
  if (!id || !port || *id < 0 || *id > kMaxConnectId) {
    emit_in(config_.command_latency, std::string(kError));
    return;
  }
  emit_in(config_.command_latency, std::string(kOk));
  int result = 0;
  if (link_state(*id) != LinkState::Closed) {
    result = 2;
  } else if (!registered(now()) || !net_.reachable() || a[1] != net_.host() || *port != net_.port()) {
    result = 3;
  } else {
    Link& link = links_[*id];
    link.client.reset();
    link.msgid_by_packet.clear();
    link.state = LinkState::Opened;
  }
  respond_in(config_.qmtopen_latency, "QMTOPEN", now(), urc(fmt::format("+QMTOPEN: {},{}", *id, result)));
}

void Bg96Modem::cmd_qmtconn(std::string_view args) {
  const auto a = split_at_args(args);
  const auto id = a.size() >= 2 ? to_int(a[0]) : std::nullopt;
  if (!id || link_state(*id) != LinkState::Opened || a[1].empty()) {
    emit_in(config_.command_latency, std::string(kError));
    return;
  }
  emit_in(config_.command_latency, std::string(kOk));
  Link& link = links_[*id];
  link.state = LinkState::Connecting;
  const SimTime issued = now();
  const int cid = *id;
  const auto gen = generation_;

  mqtt::SimClient::Callbacks cb;
  cb.on_connack = [this, cid, issued](std::uint8_t rc, SimTime t) {
    auto it = links_.find(cid);
    if (it == links_.end() || it->second.state != LinkState::Connecting) return;
    it->second.state = rc == 0 ? LinkState::Connected : LinkState::Opened;
    timings_.push_back({"QMTCONN", issued, t});
    emit(urc(fmt::format("+QMTCONN: {},0,{}", cid, rc)));
  };
  cb.on_publish_complete = [this, cid](std::uint16_t packet_id, SimTime) {
    auto it = links_.find(cid);
    if (it == links_.end()) return;
    auto m = it->second.msgid_by_packet.find(packet_id);
    if (m == it->second.msgid_by_packet.end()) return;
    const int msgid = m->second;
    it->second.msgid_by_packet.erase(m);
    emit(urc(fmt::format("+QMTPUB: {},{},0", cid, msgid)));
  };
  cb.on_closed = [this, cid](SimTime) { on_link_closed(cid); };
  link.client = std::make_unique<mqtt::SimClient>(net_, a[1], std::move(cb));
  if (!link.client->open(net_.host(), net_.port(), config_.uplink, config_.downlink)) {
    link.state = LinkState::Opened;
    respond_in(config_.command_latency, "QMTCONN", issued, urc(fmt::format("+QMTCONN: {},2", cid)));
    return;
  }
  link.client->connect();

  std::weak_ptr<bool> alive = alive_;
  queue_.schedule(issued + config_.mrt.qmtconn, [this, alive, gen, cid, issued](SimTime t) {
    const auto al = alive.lock();
    if (!al || !*al || gen != generation_) return;
    auto it = links_.find(cid);
    if (it == links_.end() || it->second.state != LinkState::Connecting) return;
    it->second.state = LinkState::Opened;
    timings_.push_back({"QMTCONN", issued, t});
    emit(urc(fmt::format("+QMTCONN: {},2", cid)));
  });
}

void Bg96Modem::cmd_qmtconn_query() {
  std::string body;
  for (const auto& [id, link] : links_) {
    if (link.state == LinkState::Closed) continue;
    if (!body.empty()) body += "\r\n";
    body += fmt::format("+QMTCONN: {},{}", id, conn_state_code(link.state));
  }
  emit_in(config_.command_latency, body.empty() ? std::string(kOk) : info(body));
}

void Bg96Modem::cmd_qmtpub(std::string_view args) {
  const auto a = split_at_args(args);
  std::optional<int> id, msgid, qos, retain;
  if (a.size() == 5) {
    id = to_int(a[0]);
    msgid = to_int(a[1]);
    qos = to_int(a[2]);
    retain = to_int(a[3]);
  }
  const bool valid = id && msgid && qos && retain && *qos >= 0 && *qos <= 2 && *retain >= 0 &&
                     *retain <= 1 && *msgid >= 0 && *msgid <= 65535 && (*qos == 0) == (*msgid == 0) &&
                     !a[4].empty();
  if (!valid || link_state(*id) != LinkState::Connected) {
    emit_in(config_.command_latency, std::string(kError));
    return;
  }
  data_mode_ = DataMode{*id, *msgid, static_cast<mqtt::QoS>(*qos), *retain == 1, a[4], {}, now()};
  emit_in(config_.prompt_latency, "\r\n> ");
}

void Bg96Modem::finish_data_mode() {
  DataMode dm = std::move(*data_mode_);
  data_mode_.reset();
  emit_in(config_.command_latency, std::string(kOk));
  auto it = links_.find(dm.connect_id);
  const bool connected = it != links_.end() && it->second.state == LinkState::Connected;
  if (dm.payload.size() > kMaxPublishPayload || !connected) {
    respond_in(config_.qmtpub_latency, "QMTPUB", dm.issued,
               urc(fmt::format("+QMTPUB: {},{},2", dm.connect_id, dm.msgid)));
    return;
  }
  published_.push_back(to_bytes(dm.payload));
  const auto packet_id = it->second.client->publish(dm.topic, to_bytes(dm.payload), dm.qos);
  if (dm.qos == mqtt::QoS::AtMostOnce) {
    respond_in(config_.qmtpub_latency, "QMTPUB", dm.issued,
               urc(fmt::format("+QMTPUB: {},{},0", dm.connect_id, dm.msgid)));
    return;
  }
  it->second.msgid_by_packet[packet_id] = dm.msgid;
}

void Bg96Modem::cmd_qmtclose(std::string_view args) {
  const auto id = to_int(args);
  if (!id || *id < 0 || *id > kMaxConnectId) {
    emit_in(config_.command_latency, std::string(kError));
    return;
  }
  emit_in(config_.command_latency, std::string(kOk));
  auto it = links_.find(*id);
  const int result = it == links_.end() || it->second.state == LinkState::Closed ? -1 : 0;
  if (result == 0) {
    if (it->second.client) it->second.client->disconnect();
    it->second.state = LinkState::Closed;
  }
  respond_in(config_.command_latency, "QMTCLOSE", now(), urc(fmt::format("+QMTCLOSE: {},{}", *id, result)));
}

void Bg96Modem::cmd_qlts() {
  if (!registered(now())) {
    respond_in(config_.command_latency, "QLTS", now(), "\r\n+CME ERROR: 3\r\n");
    return;
  }
  const auto at = config_.network_epoch +
                  std::chrono::duration_cast<std::chrono::seconds>(now() - *powered_at_);
  respond_in(config_.command_latency, "QLTS", now(), info(format_qlts(at, config_.tz_quarter_hours)));
}

void Bg96Modem::on_link_closed(int connect_id) {
  auto it = links_.find(connect_id);
  if (it == links_.end() || it->second.state == LinkState::Closed) return;
  it->second.state = LinkState::Closed;
  emit(urc(fmt::format("+QMTSTAT: {},1", connect_id)));
}

}  // namespace fieldcam::modem
