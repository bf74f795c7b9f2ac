#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "device/transmission.hpp"
#include "json.hpp"
#include "metrics/metrics.hpp"
#include "modem/bg96.hpp"
#include "receiver/service.hpp"

namespace fieldcam::config {

inline constexpr const char* kKeyEnv = "FIELDCAM_AES_KEY";
inline constexpr const char* kPasswordEnv = "FIELDCAM_PASSWORD";

struct AppConfig {
  std::uint64_t seed = 1;
  bool has_key = false;  // false until a key comes from the file or the environment
  device::DeviceConfig device;
  modem::ModemConfig modem;
  receiver::ReceiverConfig receiver;
  metrics::EnergyParams energy;
  metrics::BatteryParams battery;

  void set_key_hex(std::string_view hex);
};

// Every section and key is optional; unknown keys and wrong types throw
// Config. Durations are integer milliseconds with an `_ms` suffix.
AppConfig from_json(const nlohmann::json& j);
AppConfig load(const std::filesystem::path& path);
// Applies FIELDCAM_AES_KEY and FIELDCAM_PASSWORD when set.
void apply_environment(AppConfig& cfg);
nlohmann::json to_json(const AppConfig& cfg);

}  // namespace fieldcam::config
