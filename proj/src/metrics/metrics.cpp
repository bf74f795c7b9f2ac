#include "metrics/metrics.hpp"

#include <cmath>

#include "common/error.hpp"
#include "mqtt/packet.hpp"

namespace fieldcam::metrics {

UsageReport payload_ratio(std::size_t payload, std::size_t total) {
  if (payload == 0) fail(ErrorCode::InvalidArgument, "payload must be positive");
  if (total < payload) fail(ErrorCode::InconsistentTotals, "total is smaller than the payload");
  return {payload, total, 100.0 * static_cast<double>(payload) / static_cast<double>(total)};
}

double serial_time_ms(std::size_t bytes, std::uint32_t baud) {
  if (baud == 0) fail(ErrorCode::InvalidArgument, "baud must be positive");
  const double effective_bps = baud * 8.0 / 9.0;
  return 1000.0 * static_cast<double>(bytes) * 8.0 / effective_bps;
}

TransferBreakdown transfer_breakdown(std::size_t encoded_size, const device::TimingParams& timing,
                                     const modem::SignalProfile& signal, std::size_t segment_size) {
  timing.validate();
  if (signal.attach_delay < 0s) fail(ErrorCode::InvalidArgument, "attach delay is negative");
  const auto plan = pipeline::plan_segments(encoded_size, segment_size);
  TransferBreakdown b;
  b.encoded_size = encoded_size;
  b.header_bytes = pipeline::render_header(plan).size();
  b.publishes = plan.segment_count + 1;
  b.pre_upload_ms =
      to_ms(timing.rdy_wait + signal.attach_delay + timing.qmtopen_wait + timing.qmtconn_wait);
  b.publish_wait_ms = static_cast<double>(b.publishes) * to_ms(timing.qmtpub_wait);
  b.serial_ms = serial_time_ms(encoded_size + b.header_bytes, timing.baud);
  b.total_ms = b.pre_upload_ms + b.publish_wait_ms + b.serial_ms;
  return b;
}

void EnergyParams::validate() const {
  if (active_current < 0 || quiescent_current < 0 || runs_per_hour < 0 || run_duration < 0 ||
      supply_voltage < 0)
    fail(ErrorCode::InvalidArgument, "energy parameters must be non-negative");
  if (runs_per_hour * run_duration > 3600)
    fail(ErrorCode::InvalidArgument, "active time exceeds one hour");
}

double average_current_ma(const EnergyParams& p) {
  p.validate();
  const double active_s = p.runs_per_hour * p.run_duration;
  return 1000.0 * (p.active_current * active_s + p.quiescent_current * (3600.0 - active_s)) / 3600.0;
}

double average_power_w(const EnergyParams& p) {
  return p.supply_voltage * average_current_ma(p) / 1000.0;
}

void BatteryParams::validate() const {
  if (capacity_mah <= 0 || nominal_voltage <= 0)
    fail(ErrorCode::InvalidArgument, "battery capacity and voltage must be positive");
  if (!(converter_efficiency > 0 && converter_efficiency <= 1))
    fail(ErrorCode::InvalidArgument, "converter efficiency must be in (0, 1]");
}

BatteryLife battery_life(const BatteryParams& b, double load_watts) {
  b.validate();
  if (load_watts == 0) fail(ErrorCode::DivisionByZero, "zero load");
  if (load_watts < 0 || !std::isfinite(load_watts))
    fail(ErrorCode::InvalidArgument, "load must be positive");
  const double hours = b.capacity_wh() * b.converter_efficiency / load_watts;
  return {hours, hours / 24.0};
}

namespace {

std::size_t wire_size(const mqtt::ControlPacket& p) { return mqtt::encode_packet(p).size(); }

}  // namespace

ModeledUsage model_usage(std::size_t encoded_size, const OverheadModel& m) {
  if (m.mss == 0) fail(ErrorCode::InvalidArgument, "mss must be positive");
  const auto plan = pipeline::plan_segments(encoded_size, m.segment_size);
  const std::string header = pipeline::render_header(plan);

  ModeledUsage u;
  u.payload_bytes = encoded_size + header.size();
  std::size_t data_packets = 0;
  auto add_publish = [&](std::size_t payload_len) {
    const std::size_t n = wire_size(mqtt::ControlPacket::publish(m.topic, Bytes(payload_len, 0)));
    u.mqtt_bytes += n;
    data_packets += (n + m.mss - 1) / m.mss;
  };
  u.mqtt_bytes += wire_size(mqtt::ControlPacket::connect(m.client_id)) +
                  wire_size(mqtt::ControlPacket::connack(0));
  data_packets += 2;
  add_publish(header.size());
  for (std::size_t i = 0; i < plan.segment_count; ++i) add_publish(plan.segment_length(i));
  u.mqtt_bytes += wire_size(mqtt::ControlPacket::simple(mqtt::PacketType::Disconnect));
  data_packets += 1;

  const auto acks = static_cast<std::size_t>(std::ceil(static_cast<double>(data_packets) * m.acks_per_data_segment));
  u.tcp_packets = data_packets + acks + m.handshake_packets;
  u.tcp_ip_bytes = u.tcp_packets * m.tcp_ip_header;
  u.total_bytes = u.mqtt_bytes + u.tcp_ip_bytes;
  return u;
}

}  // namespace fieldcam::metrics
