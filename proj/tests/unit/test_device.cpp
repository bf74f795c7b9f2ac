#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "device/cellular_fsm.hpp"
#include "device/power.hpp"
#include "device/storage.hpp"
#include "device/transmission.hpp"
#include "doctest.h"
#include "mqtt/broker.hpp"
#include "pipeline/base64.hpp"

using namespace fieldcam;
using namespace fieldcam::device;

namespace {

const std::string kFixture = std::string(FIELDCAM_DATA_DIR) + "/fixture_640x480.jpg";
const auto kCipher = pipeline::CipherConfig::from_hex("2b7e151628aed2a6abf7158809cf4f3c");

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

DeviceConfig fixture_config() {
  DeviceConfig cfg;
  cfg.camera.fixture_path = kFixture;
  cfg.cipher = kCipher;
  return cfg;
}

struct World {
  mqtt::EventQueue queue;
  mqtt::Broker broker;
  mqtt::SimNetwork net{queue, broker};
  modem::Bg96Modem modem;
  std::vector<Bytes> received;
  mqtt::SimClient listener{net, "listener",
                           {.on_message = [this](const mqtt::Message& m, SimTime) { received.push_back(m.payload); }}};

  explicit World(modem::ModemConfig mc = {}) : modem(std::move(mc), net) {
    listener.open(net.host(), net.port());
    listener.connect();
    listener.subscribe("testing", mqtt::QoS::AtMostOnce);
    queue.run_until(1s);
  }
};

std::size_t count_lines(const std::vector<modem::TranscriptEntry>& serial, std::string_view prefix) {
  std::size_t n = 0;
  for (const auto& e : serial)
    if (e.flow == modem::Flow::Tx && e.bytes.starts_with(prefix)) ++n;
  return n;
}

}  // namespace

TEST_CASE("power latch pulses") {
  PowerLatch latch;
  CHECK_FALSE(latch.is_on());
  latch.pulse(Pulse::On, 1s);
  CHECK(latch.is_on());
  latch.pulse(Pulse::On, 2s);
  CHECK(latch.transitions().size() == 1);
  latch.pulse(Pulse::Off, 3s);
  CHECK_FALSE(latch.is_on());
  REQUIRE(latch.transitions().size() == 2);
  CHECK(latch.transitions()[1].at == 3s);
  CHECK(latch.params().quiescent_current == doctest::Approx(8.885e-6));
  CHECK(latch.params().active_current == doctest::Approx(0.190));
}

TEST_CASE("charge integration") {
  const PowerParams p;
  const auto duty = duty_cycle_charge(40s, 3, 3600s, p);
  // 3 * 40 s at 0.19 A plus 3480 s at 8.885 uA, over an hour.
  const double expected = (3 * 40 * 0.190 + 3480 * 8.885e-6) / 3600;
  CHECK(duty.average_current == doctest::Approx(expected).epsilon(1e-12));
  CHECK(duty.average_current * 1000 == doctest::Approx(6.3419).epsilon(1e-4));
  CHECK(duty_cycle_charge(0s, 0, 3600s, p).average_current == doctest::Approx(8.885e-6));
  CHECK(duty_cycle_charge(1200s, 3, 3600s, p).average_current == doctest::Approx(0.190));
  CHECK(code_of([&] { duty_cycle_charge(1201s, 3, 3600s, p); }) == ErrorCode::InvalidArgument);

  const std::vector<LatchTransition> tr = {{10s, LatchState::On}, {20s, LatchState::Off}};
  const auto r = integrate_charge(tr, 0s, 100s, p);
  CHECK(r.on_time == 10s);
  CHECK(r.charge_coulombs == doctest::Approx(10 * 0.190 + 90 * 8.885e-6));
  CHECK(integrate_charge(tr, 15s, 18s, p).on_time == 3s);
  CHECK(integrate_charge(tr, 0s, 5s, p).on_time == 0s);
}

TEST_CASE("virtual SD card") {
  VirtualSd sd;
  sd.write("a", Bytes{1, 2, 3, 4, 5});
  CHECK(sd.read("a") == Bytes{1, 2, 3, 4, 5});
  CHECK(sd.read_window("a", 1, 2) == Bytes{2, 3});
  CHECK(sd.read_window("a", 3, 100) == Bytes{4, 5});
  CHECK(sd.read_window("a", 9, 1).empty());
  CHECK(code_of([&] { sd.read("b"); }) == ErrorCode::NotFound);
}

TEST_CASE("camera stub") {
  PowerLatch latch;
  VirtualSd sd;
  CameraStub cam({.fixture_path = kFixture});
  CHECK(code_of([&] { cam.capture(latch, sd); }) == ErrorCode::PoweredOff);
  latch.pulse(Pulse::On, 0s);
  CHECK(cam.capture(latch, sd) == "image.jpg");
  CHECK(looks_like_jpeg(sd.read("image.jpg")));
  CHECK(sd.size("image.jpg") == 13568);
  sd.write("image.jpg", Bytes{0});
  cam.capture(latch, sd);
  CHECK(sd.size("image.jpg") == 13568);
  CHECK(sd.file_count() == 1);

  CameraStub missing({.fixture_path = "/nonexistent/frame.jpg"});
  CHECK(code_of([&] { missing.capture(latch, sd); }) == ErrorCode::CaptureFailed);

  const auto junk = std::filesystem::temp_directory_path() / "fieldcam_not_a_jpeg.bin";
  std::ofstream(junk) << "plain text";
  CameraStub strict({.fixture_path = junk.string()});
  CHECK(code_of([&] { strict.capture(latch, sd); }) == ErrorCode::CaptureFailed);
  CameraStub lenient({.fixture_path = junk.string(), .strict_jpeg = false});
  CHECK_NOTHROW(lenient.capture(latch, sd));
  std::filesystem::remove(junk);
  CHECK(code_of([] { CameraStub({.quality = 64}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("serial timing at 115200 8N1") {
  const TimingParams t;
  CHECK(t.serial_time(0) == 0us);
  CHECK(t.serial_time(12800) == 1s);
  CHECK(to_ms(t.serial_time(18103)) == doctest::Approx(1414.3).epsilon(1e-4));
}

TEST_CASE("cellular handler on scripted modem output") {
  VirtualSd sd;
  sd.write(std::string(pipeline::kEncodedFile), Bytes(1600, 'A'));
  std::vector<CellState> seen;
  CellularFsm fsm({}, {}, sd, {.on_state = [&](CellState, CellState to, SimTime) { seen.push_back(to); }});

  CHECK(fsm.step("RDY\r\n", 1s).empty());
  CHECK(fsm.state() == CellState::wait_rdy);
  CHECK(fsm.step("", 3s).empty());
  CHECK(fsm.state() == CellState::send_CSQ);
  CHECK(fsm.step("", 3001ms) == "AT+CSQ\r");
  CHECK(fsm.state() == CellState::wait_CSQ);
  const SimTime sent_done = fsm.busy_until();
  CHECK(sent_done == 3001ms + TimingParams{}.serial_time(7));

  SUBCASE("no transition before the budget") {
    CHECK(fsm.step("", sent_done + 120ms).empty());
    CHECK(fsm.state() == CellState::wait_CSQ);
  }
  SUBCASE("no signal means another CSQ") {
    CHECK(fsm.step("AT+CSQ\r\r\n+CSQ: 99,99\r\n\r\nOK\r\n", sent_done + 300ms).empty());
    CHECK(fsm.state() == CellState::do_CSQ);
    fsm.step("", sent_done + 301ms);
    CHECK(fsm.state() == CellState::send_CSQ);
  }
  SUBCASE("a registered signal moves on to QMTOPEN") {
    fsm.step("\r\n+CSQ: 21,0\r\n\r\nOK\r\n", sent_done + 300ms);
    fsm.step("", sent_done + 301ms);
    CHECK(fsm.state() == CellState::send_QMTOPEN);
    CHECK(fsm.step("", sent_done + 302ms) == "AT+QMTOPEN=5,\"broker.hivemq.com\",1883\r");
  }
  SUBCASE("one command per step at most") {
    SimTime t = sent_done;
    for (int i = 0; i < 2000; ++i) {
      t += 1ms;
      const auto out = fsm.step(i % 7 == 0 ? "\r\n+CSQ: 99,99\r\n" : "", t);
      CHECK(std::count(out.begin(), out.end(), '\r') <= 1);
      if (!out.empty()) t = fsm.busy_until();
    }
  }
  CHECK(seen.front() == CellState::send_CSQ);
}

TEST_CASE("cellular handler fails fast on a rejected publish") {
  VirtualSd sd;
  sd.write(std::string(pipeline::kEncodedFile), Bytes(10, 'A'));
  CellularFsm fsm({}, {}, sd);
  SimTime t = 3s;
  auto drive_until = [&](CellState target, std::string_view feed) {
    for (int i = 0; i < 100000 && fsm.state() != target; ++i) {
      t = std::max(t + 1ms, fsm.busy_until());
      fsm.step(feed, t);
    }
    REQUIRE(fsm.state() == target);
  };
  fsm.step("RDY", t);
  drive_until(CellState::send_QMTOPEN, "+CSQ: 20,0");
  drive_until(CellState::send_QMTCONN_once, "+QMTOPEN: 5,0");
  drive_until(CellState::pub_header, "+QMTCONN: 5,3");
  drive_until(CellState::wait_QMTPUB, ">");
  CHECK(fsm.plan() == pipeline::SegmentPlan{1, 1500, 10});
  drive_until(CellState::cellular_failed, "+QMTPUB: 5,0,2");
  CHECK(fsm.failure() == "header publish failed");
  CHECK(fsm.finished());
  CHECK_FALSE(fsm.succeeded());
}

TEST_CASE("transmission of the fixture image") {
  World w;
  Device dev(fixture_config());
  const auto tr = run_transmission(dev, w.modem, 1s);
  w.queue.run_until(tr.powered_off + 2s);

  REQUIRE(tr.success);
  CHECK(tr.final_state == CellState::cellular_done);
  CHECK(tr.raw_size == 13568);
  CHECK(tr.encoded_size == 18093);
  CHECK(tr.plan == pipeline::SegmentPlan{13, 1500, 93});
  REQUIRE(tr.publishes.size() == 14);
  CHECK(tr.publishes.front().segment == -1);
  CHECK(tr.publishes.front().payload_bytes == 10);
  CHECK(tr.publishes.back().payload_bytes == 93);

  // Everything the modem published, minus the header, is the SD file.
  const auto& published = w.modem.published();
  REQUIRE(published.size() == 14);
  CHECK(to_string(published[0]) == "13,1500,93");
  Bytes joined;
  for (std::size_t i = 1; i < published.size(); ++i)
    joined.insert(joined.end(), published[i].begin(), published[i].end());
  CHECK(joined == dev.sd().read(std::string(pipeline::kEncodedFile)));
  CHECK(w.received == published);

  CHECK(count_lines(tr.serial, "AT+QMTCONN=") == 1);
  CHECK(count_lines(tr.serial, "AT+QMTPUB=") == 14);
  CHECK(count_lines(tr.serial, "AT+CSQ") > 1);
  CHECK(tr.network_time.starts_with("+QLTS: \"24/01/02,"));
  CHECK_FALSE(dev.latch().is_on());
  REQUIRE(tr.latch.size() == 2);
  CHECK(tr.latch[0].at == 1s);
  CHECK(tr.latch[1].at == tr.powered_off);
  CHECK(dev.sd().exists("image_encrypted"));

  const auto ph = tr.phases(dev.config().timing);
  CHECK(ph.pre_upload + ph.upload + ph.finish == ph.total);
  CHECK(ph.publish_wait == 7000ms);
  CHECK(ph.payload_serial == TimingParams{}.serial_time(18103));

  const auto energy = energy_of_trace(tr, dev.config().power, std::chrono::hours(1), 3);
  CHECK(energy.on_time == 3 * ph.total);
  CHECK(energy.average_current > 0.004);
  CHECK(energy.average_current < 0.007);
}

TEST_CASE("transmission is reproducible") {
  auto once = [] {
    World w;
    Device dev(fixture_config());
    return run_transmission(dev, w.modem, 1s).render_log();
  };
  const auto a = once();
  CHECK(a == once());
  CHECK(a.find("STATE cellular_done") != std::string::npos);
  CHECK(a.find("<data:1500>") != std::string::npos);
}

TEST_CASE("unreachable broker ends in cellular_failed") {
  World w;
  w.net.set_reachable(false);
  Device dev(fixture_config());
  const auto tr = run_transmission(dev, w.modem, 1s);
  CHECK_FALSE(tr.success);
  CHECK(tr.final_state == CellState::cellular_failed);
  CHECK(tr.failure == "QMTOPEN retries exhausted");
  CHECK(count_lines(tr.serial, "AT+QMTOPEN=") == 6);
  CHECK(tr.publishes.empty());
  CHECK_FALSE(dev.latch().is_on());
}

TEST_CASE("slow CONNACK is polled, never re-requested") {
  modem::ModemConfig mc;
  mc.uplink.latency = 2600ms;
  mc.downlink.latency = 2600ms;
  World w(mc);
  Device dev(fixture_config());
  const auto tr = run_transmission(dev, w.modem, 1s);
  REQUIRE(tr.success);
  CHECK(count_lines(tr.serial, "AT+QMTCONN=") == 1);
  CHECK(count_lines(tr.serial, "AT+QMTCONN?") == 2);
}

TEST_CASE("missing fixture fails before the modem is used") {
  World w;
  auto cfg = fixture_config();
  cfg.camera.fixture_path = "/nonexistent.jpg";
  Device dev(cfg);
  const auto tr = run_transmission(dev, w.modem, 1s);
  CHECK_FALSE(tr.success);
  CHECK(tr.failure.find("fixture missing") != std::string::npos);
  CHECK(tr.powered_off == 1s);
}

TEST_CASE("publish count law") {
  for (const std::size_t raw : {1u, 1100u, 1125u, 1126u, 5000u, 20000u}) {
    const auto path = std::filesystem::temp_directory_path() / "fieldcam_law.bin";
    write_file(path, Bytes(raw, 0x5A));
    World w;
    auto cfg = fixture_config();
    cfg.camera = {.fixture_path = path.string(), .strict_jpeg = false};
    Device dev(cfg);
    const auto tr = run_transmission(dev, w.modem, 1s);
    REQUIRE(tr.success);
    CHECK(tr.publishes.size() == 1 + (tr.encoded_size + 1499) / 1500);
    std::filesystem::remove(path);
  }
}
