#include "metrics/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fieldcam::metrics {

std::string Report::text() const {
  std::size_t label_w = 0;
  std::size_t value_w = 0;
  std::vector<std::string> values;
  for (const auto& r : rows) {
    values.push_back(fmt::format("{:.{}f}", r.value, r.precision));
    label_w = std::max(label_w, r.label.size());
    value_w = std::max(value_w, values.back().size());
  }
  std::string out = title + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line = fmt::format("  {:<{}}  {:>{}}", rows[i].label, label_w, values[i], value_w);
    if (!rows[i].unit.empty()) line += " " + rows[i].unit;
    out += line + "\n";
  }
  return out;
}

nlohmann::json Report::json() const {
  nlohmann::json j;
  j["report"] = title;
  for (const auto& r : rows) {
    if (r.precision == 0)
      j[r.key] = static_cast<std::int64_t>(std::llround(r.value));
    else
      j[r.key] = r.value;
  }
  return j;
}

Report energy_report(const EnergyParams& e, const BatteryParams& b) {
  const double ma = average_current_ma(e);
  const double w = average_power_w(e);
  const auto life = battery_life(b, w);
  return {"energy",
          {{"active_current_ma", "active current", e.active_current * 1000, "mA", 1},
           {"quiescent_current_ma", "quiescent current", e.quiescent_current * 1000, "mA", 6},
           {"runs_per_hour", "runs per hour", e.runs_per_hour, "", 0},
           {"run_duration_s", "run duration", e.run_duration, "s", 1},
           {"average_current_ma", "average current", ma, "mA", 3},
           {"average_power_w", "average power", w, "W", 5},
           {"battery_capacity_wh", "battery capacity", b.capacity_wh(), "Wh", 2},
           {"converter_efficiency", "converter efficiency", b.converter_efficiency, "", 2},
           {"battery_life_h", "battery life", life.hours, "h", 1},
           {"battery_life_days", "battery life", life.days, "days", 2}}};
}

Report usage_report(std::size_t payload, std::size_t total, std::size_t encoded_size,
                    const OverheadModel& model) {
  const auto u = payload_ratio(payload, total);
  const auto m = model_usage(encoded_size, model);
  const auto modeled = payload_ratio(m.payload_bytes, m.total_bytes);
  return {"usage",
          {{"payload_bytes", "payload", static_cast<double>(u.payload_bytes), "B", 0},
           {"total_bytes", "carrier total", static_cast<double>(u.total_bytes), "B", 0},
           {"overhead_bytes", "overhead", static_cast<double>(total - payload), "B", 0},
           {"ratio_percent", "payload ratio", u.ratio, "%", 2},
           {"modeled_mqtt_bytes", "modeled MQTT bytes", static_cast<double>(m.mqtt_bytes), "B", 0},
           {"modeled_tcp_packets", "modeled TCP packets", static_cast<double>(m.tcp_packets), "", 0},
           {"modeled_tcp_ip_bytes", "modeled TCP/IP headers", static_cast<double>(m.tcp_ip_bytes), "B", 0},
           {"modeled_total_bytes", "modeled total", static_cast<double>(m.total_bytes), "B", 0},
           {"modeled_ratio_percent", "modeled ratio", modeled.ratio, "%", 2}}};
}

Report timing_report(const TransferBreakdown& b) {
  return {"timing",
          {{"encoded_bytes", "encoded file", static_cast<double>(b.encoded_size), "B", 0},
           {"header_bytes", "transfer header", static_cast<double>(b.header_bytes), "B", 0},
           {"publishes", "publishes", static_cast<double>(b.publishes), "", 0},
           {"pre_upload_ms", "pre-upload", b.pre_upload_ms, "ms", 0},
           {"publish_wait_ms", "publish wait", b.publish_wait_ms, "ms", 0},
           {"serial_ms", "serial transfer", b.serial_ms, "ms", 1},
           {"total_ms", "total", b.total_ms, "ms", 1}}};
}

Report simulated_timing_report(const device::TransmissionTrace& trace,
                               const device::TimingParams& timing) {
  const auto p = trace.phases(timing);
  return {"simulated timing",
          {{"encoded_bytes", "encoded file", static_cast<double>(trace.encoded_size), "B", 0},
           {"publishes", "publishes", static_cast<double>(trace.publishes.size()), "", 0},
           {"pre_upload_ms", "pre-upload", to_ms(p.pre_upload), "ms", 1},
           {"upload_ms", "upload", to_ms(p.upload), "ms", 1},
           {"publish_wait_ms", "publish wait", to_ms(p.publish_wait), "ms", 1},
           {"payload_serial_ms", "payload serial", to_ms(p.payload_serial), "ms", 1},
           {"command_serial_ms", "command serial", to_ms(p.command_serial), "ms", 1},
           {"finish_ms", "finish", to_ms(p.finish), "ms", 1},
           {"total_ms", "total", to_ms(p.total), "ms", 1}}};
}

}  // namespace fieldcam::metrics
