#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <charconv>

#include "common/error.hpp"
#include "pipeline/base64.hpp"

namespace fieldcam::pipeline {

RawFile RawFile::from(Bytes bytes) {
  if (bytes.empty()) fail(ErrorCode::EmptyFile, "raw file is empty");
  return RawFile{std::move(bytes)};
}

CipherConfig CipherConfig::from_hex(std::string_view hex) {
  if (hex.size() != 32)
    fail(ErrorCode::InvalidArgument, "AES-128 key must be 32 hex characters");
  const Bytes raw = parse_hex(hex);
  CipherConfig cfg;
  std::copy(raw.begin(), raw.end(), cfg.key.begin());
  return cfg;
}

Bytes pad16(ByteView raw) {
  if (raw.empty()) fail(ErrorCode::EmptyFile, "cannot pad an empty file");
  Bytes out(raw.begin(), raw.end());
  out.resize((raw.size() + 15) / 16 * 16, 0x00);
  return out;
}

Bytes aes128_encrypt(ByteView padded, const CipherConfig& cfg) {
  return ecb_encrypt(padded, cfg.key);
}

Bytes aes128_decrypt(ByteView cipher, const CipherConfig& cfg) {
  return ecb_decrypt(cipher, cfg.key);
}

Bytes truncate16(ByteView data) {
  if (data.size() < 16)
    fail(ErrorCode::TooShort,
         "need at least 16 bytes to truncate, got " + std::to_string(data.size()));
  return Bytes(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(data.size() / 16 * 16));
}

SegmentPlan plan_segments(std::size_t encoded_size, std::size_t segment_size) {
  if (encoded_size == 0) fail(ErrorCode::EmptyFile, "nothing to segment");
  if (segment_size == 0) fail(ErrorCode::InvalidArgument, "segment size must be positive");
  if (segment_size > kModemPublishLimit)
    fail(ErrorCode::ExceedsModemLimit,
         "segment size " + std::to_string(segment_size) + " exceeds the 1548-byte publish limit");
  SegmentPlan plan;
  plan.segment_size = segment_size;
  plan.segment_count = (encoded_size + segment_size - 1) / segment_size;
  plan.last_segment_size = encoded_size - (plan.segment_count - 1) * segment_size;
  return plan;
}

std::string render_header(const SegmentPlan& plan) {
  return std::to_string(plan.segment_count) + "," + std::to_string(plan.segment_size) + "," +
         std::to_string(plan.last_segment_size);
}

namespace {

std::size_t parse_field(std::string_view field, std::string_view whole) {
  std::size_t value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last)
    fail(ErrorCode::MalformedHeader, "malformed transfer header '" + std::string(whole) + "'");
  return value;
}

}  // namespace

SegmentPlan parse_header(std::string_view text) {
  const auto c1 = text.find(',');
  const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
  if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos)
    fail(ErrorCode::MalformedHeader, "transfer header needs three fields: '" + std::string(text) + "'");

  SegmentPlan plan;
  plan.segment_count = parse_field(text.substr(0, c1), text);
  plan.segment_size = parse_field(text.substr(c1 + 1, c2 - c1 - 1), text);
  plan.last_segment_size = parse_field(text.substr(c2 + 1), text);

  if (plan.segment_count == 0 || plan.segment_size == 0 || plan.last_segment_size == 0 ||
      plan.last_segment_size > plan.segment_size || plan.segment_size > kModemPublishLimit)
    fail(ErrorCode::MalformedHeader, "inconsistent transfer header '" + std::string(text) + "'");
  return plan;
}

std::string encode_pipeline(const RawFile& raw, const CipherConfig& cfg) {
  return b64_encode(aes128_encrypt(pad16(raw.bytes), cfg));
}

Bytes decode_pipeline(std::string_view encoded, const CipherConfig& cfg) {
  return aes128_decrypt(truncate16(b64_decode(encoded)), cfg);
}

std::size_t encoded_length(std::size_t raw_size) {
  const std::size_t padded = (raw_size + 15) / 16 * 16;
  return 4 * ((padded + 2) / 3);
}

}  // namespace fieldcam::pipeline
