#pragma once

#include <optional>
#include <string>
#include <vector>

#include "device/cellular_fsm.hpp"
#include "device/power.hpp"
#include "device/storage.hpp"
#include "modem/bg96.hpp"
#include "modem/transcript.hpp"
#include "pipeline/pipeline.hpp"

namespace fieldcam::device {

struct DeviceConfig {
  CameraConfig camera;
  pipeline::CipherConfig cipher;
  FsmConfig fsm;
  TimingParams timing;
  PowerParams power;
  // The encoded file on the SD card ends with a newline, as a line-oriented
  // encoder writes it. The receiver strips it before decoding.
  bool newline_terminated = true;
};

struct StateEntry {
  SimTime at;
  CellState state;
};

struct PublishRecord {
  SimTime at;
  int segment;  // -1 for the header
  std::size_t payload_bytes;
};

struct WaitRecord {
  CellState state;
  SimTime started;
  SimTime ended;
};

struct PhaseDurations {
  Duration pre_upload{0};      // power on to the first header publish command
  Duration upload{0};          // first publish command to cellular_done
  Duration finish{0};          // cellular_done to power off
  Duration total{0};           // pre_upload + upload + finish
  Duration publish_wait{0};    // sum of the waits after each publish
  Duration payload_serial{0};  // clocking out header and segment payload bytes
  Duration command_serial{0};  // every other byte written during upload
};

struct TransmissionTrace {
  bool success = false;
  CellState final_state = CellState::wait_rdy;
  std::string failure;
  std::size_t raw_size = 0;
  std::size_t encoded_size = 0;
  std::optional<pipeline::SegmentPlan> plan;
  std::string network_time;  // +QLTS reply

  SimTime powered_on{0};
  std::optional<SimTime> upload_started;
  std::optional<SimTime> upload_finished;
  SimTime powered_off{0};

  std::vector<StateEntry> states;
  std::vector<PublishRecord> publishes;
  std::vector<WaitRecord> waits;
  std::vector<LatchTransition> latch;
  std::vector<modem::TranscriptEntry> serial;
  std::size_t upload_bytes_written = 0;

  PhaseDurations phases(const TimingParams& timing) const;
  // One line per event: time in ms, then STATE, PUB, TX or RX.
  std::string render_log() const;
};

// The transmitter: latch, camera, SD card and cellular handler.
class Device {
 public:
  explicit Device(DeviceConfig config);

  const DeviceConfig& config() const { return config_; }
  PowerLatch& latch() { return latch_; }
  const VirtualSd& sd() const { return sd_; }
  VirtualSd& sd() { return sd_; }

  // Capture and encode into the SD card stage files. Returns the encoded size.
  std::size_t prepare_upload();

 private:
  DeviceConfig config_;
  PowerLatch latch_;
  CameraStub camera_;
  VirtualSd sd_;
};

// Power on, capture, encode, drive the cellular handler against the modem
// until it finishes, then power off. The modem shares the network's event
// queue; `start` must not precede the queue's current time.
TransmissionTrace run_transmission(Device& device, modem::Bg96Modem& modem, SimTime start);

// Charge over `window` when the traced run repeats `runs` times in it.
ChargeReport energy_of_trace(const TransmissionTrace& trace, const PowerParams& params,
                             Duration window = std::chrono::hours(1), int runs = 1);

}  // namespace fieldcam::device
