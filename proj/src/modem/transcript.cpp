#include "modem/transcript.hpp"

#include <fmt/format.h>

#include <fstream>

#include "common/error.hpp"

namespace fieldcam::modem {

void Transcript::add(SimTime at, Flow flow, std::string bytes, bool data) {
  if (bytes.empty()) return;
  entries_.push_back({at, flow, std::move(bytes), data});
}

std::string escape_serial(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (const char c : bytes) {
    const auto u = static_cast<unsigned char>(c);
    switch (c) {
      case '\r': out += "\\r"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      default:
        if (u < 0x20 || u >= 0x7f)
          out += fmt::format("\\x{:02X}", u);
        else
          out += c;
    }
  }
  return out;
}

std::string render_entry(const TranscriptEntry& e) {
  const char* dir = e.flow == Flow::Tx ? "TX" : "RX";
  std::string body = (e.data && e.bytes.size() > Transcript::kDataElideAbove)
                         ? fmt::format("<data:{}>", e.bytes.size())
                         : escape_serial(e.bytes);
  return fmt::format("{:11.3f} {} {}", to_ms(e.at), dir, body);
}

std::string Transcript::render() const {
  std::string out;
  for (const auto& e : entries_) {
    out += render_entry(e);
    out += '\n';
  }
  return out;
}

void Transcript::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot write transcript " + path);
  f << render();
}

}  // namespace fieldcam::modem
