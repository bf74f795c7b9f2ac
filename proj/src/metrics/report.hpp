#pragma once

#include <string>
#include <vector>

#include "device/transmission.hpp"
#include "json.hpp"
#include "metrics/metrics.hpp"

namespace fieldcam::metrics {

struct ReportRow {
  std::string key;    // JSON field name
  std::string label;  // text column
  double value = 0;
  std::string unit;
  int precision = 2;
};

struct Report {
  std::string title;
  std::vector<ReportRow> rows;

  // Label, value and unit columns, aligned.
  std::string text() const;
  // {"report": title, key: value, ...}
  nlohmann::json json() const;
};

Report energy_report(const EnergyParams& e, const BatteryParams& b);
Report usage_report(std::size_t payload, std::size_t total, std::size_t encoded_size,
                    const OverheadModel& model = {});
Report timing_report(const TransferBreakdown& b);
// Phases of a simulated run, for comparison with timing_report.
Report simulated_timing_report(const device::TransmissionTrace& trace,
                               const device::TimingParams& timing);

}  // namespace fieldcam::metrics
