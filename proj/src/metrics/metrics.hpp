#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "device/cellular_fsm.hpp"
#include "modem/bg96.hpp"

namespace fieldcam::metrics {

// Carrier-reported usage for one 18093-byte transfer. A measurement, kept as a
// reference value; nothing here derives it.
inline constexpr std::size_t kReferencePayloadBytes = 18093;
inline constexpr std::size_t kReferenceCarrierBytes = 20686;

struct UsageReport {
  std::size_t payload_bytes = 0;
  std::size_t total_bytes = 0;
  double ratio = 0;  // percent, unrounded
};

// Throws InconsistentTotals when total < payload, InvalidArgument when payload is 0.
UsageReport payload_ratio(std::size_t payload, std::size_t total);

// 8N1 framing: nine bit times per byte.
double serial_time_ms(std::size_t bytes, std::uint32_t baud);

struct TransferBreakdown {
  std::size_t encoded_size = 0;
  std::size_t header_bytes = 0;
  std::size_t publishes = 0;
  double pre_upload_ms = 0;    // rdy + attach + open + conn waits
  double publish_wait_ms = 0;  // publishes x qmtpub wait
  double serial_ms = 0;        // header and payload on the UART
  double total_ms = 0;
};

TransferBreakdown transfer_breakdown(std::size_t encoded_size, const device::TimingParams& timing,
                                     const modem::SignalProfile& signal,
                                     std::size_t segment_size = pipeline::kDefaultSegmentSize);

struct EnergyParams {
  double active_current = 0.190;       // A
  double quiescent_current = 8.885e-6;  // A
  double runs_per_hour = 3;
  double run_duration = 40;  // s
  double supply_voltage = 5.0;

  void validate() const;
};

double average_current_ma(const EnergyParams& p);
double average_power_w(const EnergyParams& p);

struct BatteryParams {
  double capacity_mah = 2600;
  double nominal_voltage = 3.7;
  double converter_efficiency = 0.96;

  void validate() const;
  double capacity_wh() const { return capacity_mah / 1000.0 * nominal_voltage; }
};

struct BatteryLife {
  double hours = 0;
  double days = 0;
};

// Throws DivisionByZero for a zero load.
BatteryLife battery_life(const BatteryParams& b, double load_watts);

// Illustrative decomposition of carrier usage into MQTT framing and TCP/IP
// headers. Not fitted to any measurement.
struct OverheadModel {
  std::string client_id = "clientExample";
  std::string topic = "testing";
  std::size_t segment_size = pipeline::kDefaultSegmentSize;
  std::size_t mss = 1460;
  std::size_t tcp_ip_header = 40;
  std::size_t handshake_packets = 7;  // SYN, SYN-ACK, ACK, and four for teardown
  double acks_per_data_segment = 1.0;
};

struct ModeledUsage {
  std::size_t payload_bytes = 0;  // encoded file plus transfer header
  std::size_t mqtt_bytes = 0;     // complete MQTT packets both ways
  std::size_t tcp_packets = 0;
  std::size_t tcp_ip_bytes = 0;
  std::size_t total_bytes = 0;
};

ModeledUsage model_usage(std::size_t encoded_size, const OverheadModel& m = {});

}  // namespace fieldcam::metrics
