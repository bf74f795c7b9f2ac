#include "pipeline/base64.hpp"

#include <array>

#include "common/error.hpp"

namespace fieldcam::pipeline {
namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_reverse() {
  std::array<int, 256> r{};
  for (auto& v : r) v = -1;
  for (int i = 0; i < 64; ++i) r[static_cast<unsigned char>(kAlphabet[i])] = i;
  return r;
}

constexpr auto kReverse = make_reverse();

bool is_trailing_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

}  // namespace

std::string b64_encode(ByteView data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16 |
                            static_cast<std::uint32_t>(data[i + 1]) << 8 | data[i + 2];
    out.push_back(kAlphabet[v >> 18 & 0x3f]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
    out.push_back(kAlphabet[v >> 6 & 0x3f]);
    out.push_back(kAlphabet[v & 0x3f]);
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(kAlphabet[v >> 18 & 0x3f]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v =
        static_cast<std::uint32_t>(data[i]) << 16 | static_cast<std::uint32_t>(data[i + 1]) << 8;
    out.push_back(kAlphabet[v >> 18 & 0x3f]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
    out.push_back(kAlphabet[v >> 6 & 0x3f]);
    out.push_back('=');
  }
  return out;
}

Bytes b64_decode(std::string_view text) {
  while (!text.empty() && is_trailing_space(text.back())) text.remove_suffix(1);
  if (text.size() % 4 != 0)
    fail(ErrorCode::InvalidEncoding,
         "base64 length " + std::to_string(text.size()) + " is not a multiple of 4");

  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;

  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last_quad = i + 4 == text.size();
    std::uint32_t v = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const char c = text[i + j];
      int d;
      if (c == '=' && last_quad && j >= 4 - pad) {
        d = 0;
      } else {
        d = kReverse[static_cast<unsigned char>(c)];
        if (d < 0)
          fail(ErrorCode::InvalidEncoding,
               "invalid base64 character at offset " + std::to_string(i + j));
      }
      v = v << 6 | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (!(last_quad && pad == 2)) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (!(last_quad && pad >= 1)) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

}  // namespace fieldcam::pipeline
