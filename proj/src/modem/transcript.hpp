#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "common/sim_time.hpp"

namespace fieldcam::modem {

// TX is host to modem, RX is modem to host.
enum class Flow { Tx, Rx };

struct TranscriptEntry {
  SimTime at;
  Flow flow;
  std::string bytes;
  bool data = false;  // payload fed in data mode
};

// Serial monitor log. Control characters are escaped so each entry renders
// on one line; data-mode payloads longer than kDataElideAbove are shown as
// <data:N>.
class Transcript {
 public:
  static constexpr std::size_t kDataElideAbove = 64;

  void add(SimTime at, Flow flow, std::string bytes, bool data = false);
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  std::string render() const;
  void write(const std::string& path) const;

 private:
  std::vector<TranscriptEntry> entries_;
};

std::string escape_serial(std::string_view bytes);
std::string render_entry(const TranscriptEntry& e);

}  // namespace fieldcam::modem
