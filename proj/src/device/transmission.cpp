#include "device/transmission.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "common/error.hpp"
#include "pipeline/base64.hpp"

namespace fieldcam::device {

using pipeline::kEncodedFile;
using pipeline::kEncryptedFile;
using pipeline::kImageFile;

Device::Device(DeviceConfig config)
    : config_(std::move(config)), latch_(config_.power), camera_(config_.camera) {
  config_.timing.validate();
}

std::size_t Device::prepare_upload() {
  camera_.capture(latch_, sd_);
  const auto raw = pipeline::RawFile::from(sd_.read(std::string(kImageFile)));
  Bytes cipher = pipeline::aes128_encrypt(pipeline::pad16(raw.bytes), config_.cipher);
  std::string encoded = pipeline::b64_encode(cipher);
  if (config_.newline_terminated) encoded += '\n';
  sd_.write(std::string(kEncryptedFile), std::move(cipher));
  sd_.write(config_.fsm.file, to_bytes(encoded));
  return encoded.size();
}

TransmissionTrace run_transmission(Device& device, modem::Bg96Modem& modem, SimTime start) {
  auto& queue = modem.queue();
  if (start < queue.now()) fail(ErrorCode::InvalidArgument, "transmission cannot start in the past");
  queue.run_until(start);

  const TimingParams& timing = device.config().timing;
  const std::size_t transcript_mark = modem.transcript().entries().size();
  const std::size_t latch_mark = device.latch().transitions().size();
  TransmissionTrace tr;
  tr.powered_on = start;
  device.latch().pulse(Pulse::On, start);
  modem.power_on(start);

  SimTime t = start;
  auto power_down = [&] {
    device.latch().pulse(Pulse::Off, t);
    modem.power_off(t);
    tr.powered_off = t;
    const auto& entries = modem.transcript().entries();
    tr.serial.assign(entries.begin() + static_cast<std::ptrdiff_t>(transcript_mark), entries.end());
    const auto& latch = device.latch().transitions();
    tr.latch.assign(latch.begin() + static_cast<std::ptrdiff_t>(latch_mark), latch.end());
  };

  try {
    tr.encoded_size = device.prepare_upload();
    tr.raw_size = device.sd().size(std::string(kImageFile));
  } catch (const Error& e) {
    tr.failure = e.what();
    power_down();
    return tr;
  }

  FsmObserver observer;
  observer.on_state = [&tr](CellState, CellState to, SimTime at) {
    tr.states.push_back({at, to});
    if (to == CellState::pub_header && !tr.upload_started) tr.upload_started = at;
    if (to == CellState::cellular_done) tr.upload_finished = at;
  };
  observer.on_publish = [&tr](int segment, std::size_t bytes, SimTime at) {
    tr.publishes.push_back({at, segment, bytes});
  };
  observer.on_wait_done = [&tr](CellState state, SimTime started, SimTime ended) {
    tr.waits.push_back({state, started, ended});
  };
  CellularFsm fsm(device.config().fsm, timing, device.sd(), std::move(observer));
  fsm.reset(start);
  tr.states.push_back({start, CellState::wait_rdy});

  while (!fsm.finished()) {
    if (t - start > timing.max_duration) {
      tr.failure = "transmission exceeded its time limit";
      break;
    }
    std::string out = fsm.step(modem.poll_serial(t), t);
    if (out.empty()) {
      t += timing.loop_tick;
      continue;
    }
    if (tr.upload_started) tr.upload_bytes_written += out.size();
    t = fsm.busy_until();
    queue.schedule(t, [&modem, out = std::move(out)](SimTime) { modem.receive(out); });
  }

  tr.final_state = fsm.state();
  tr.success = fsm.succeeded();
  tr.plan = fsm.plan();
  tr.network_time = fsm.network_time();
  if (tr.failure.empty()) tr.failure = fsm.failure();
  queue.run_until(t);
  power_down();
  return tr;
}

PhaseDurations TransmissionTrace::phases(const TimingParams& timing) const {
  PhaseDurations p;
  p.total = powered_off - powered_on;
  const SimTime up = upload_started.value_or(powered_off);
  const SimTime done = upload_finished.value_or(powered_off);
  p.pre_upload = up - powered_on;
  p.upload = done - up;
  p.finish = powered_off - done;
  std::size_t payload = 0;
  for (const auto& pub : publishes) payload += pub.payload_bytes;
  for (const auto& w : waits)
    if (w.state == CellState::wait_QMTPUB) p.publish_wait += w.ended - w.started;
  p.payload_serial = timing.serial_time(payload);
  p.command_serial = timing.serial_time(upload_bytes_written - std::min(payload, upload_bytes_written));
  return p;
}

std::string TransmissionTrace::render_log() const {
  struct Line {
    SimTime at;
    int order;
    std::string text;
  };
  std::vector<Line> lines;
  for (const auto& s : states)
    lines.push_back({s.at, 0, fmt::format("{:11.3f} STATE {}", to_ms(s.at), to_string(s.state))});
  for (const auto& p : publishes)
    lines.push_back({p.at, 1,
                     fmt::format("{:11.3f} PUB {} {}", to_ms(p.at),
                                 p.segment < 0 ? std::string("header") : fmt::format("segment {}", p.segment),
                                 p.payload_bytes)});
  for (const auto& e : serial) lines.push_back({e.at, 2, modem::render_entry(e)});
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.at != b.at ? a.at < b.at : a.order < b.order;
  });
  std::string out;
  for (const auto& l : lines) out += l.text + '\n';
  return out;
}

ChargeReport energy_of_trace(const TransmissionTrace& trace, const PowerParams& params, Duration window,
                             int runs) {
  Duration on{0};
  std::optional<SimTime> since;
  for (const auto& tr : trace.latch) {
    if (tr.to == LatchState::On) {
      since = tr.at;
    } else if (since) {
      on += tr.at - *since;
      since.reset();
    }
  }
  return duty_cycle_charge(on, runs, window, params);
}

}  // namespace fieldcam::device
