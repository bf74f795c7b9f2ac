#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "common/bytes.hpp"
#include "pipeline/aes128.hpp"

namespace fieldcam::pipeline {

// Largest payload the modem accepts in one AT+QMTPUB.
inline constexpr std::size_t kModemPublishLimit = 1548;
inline constexpr std::size_t kDefaultSegmentSize = 1500;

// Stage file names used on the device SD card and in receiver storage.
inline constexpr std::string_view kImageFile = "image.jpg";
inline constexpr std::string_view kEncryptedFile = "image_encrypted";
inline constexpr std::string_view kEncodedFile = "inputjpg_encrypted_encoded";

struct RawFile {
  Bytes bytes;

  // Throws EmptyFile for an empty buffer.
  static RawFile from(Bytes bytes);
  std::size_t declared_size() const { return bytes.size(); }
};

struct CipherConfig {
  AesKey key{};

  // 32 hex characters. Throws InvalidArgument otherwise.
  static CipherConfig from_hex(std::string_view hex);
};

struct SegmentPlan {
  std::size_t segment_count = 0;
  std::size_t segment_size = 0;
  std::size_t last_segment_size = 0;

  std::size_t total_size() const {
    return (segment_count - 1) * segment_size + last_segment_size;
  }
  std::size_t segment_length(std::size_t index) const {
    return index + 1 == segment_count ? last_segment_size : segment_size;
  }
  bool operator==(const SegmentPlan&) const = default;
};

Bytes pad16(ByteView raw);
Bytes aes128_encrypt(ByteView padded, const CipherConfig& cfg);
Bytes aes128_decrypt(ByteView cipher, const CipherConfig& cfg);
Bytes truncate16(ByteView data);

SegmentPlan plan_segments(std::size_t encoded_size,
                          std::size_t segment_size = kDefaultSegmentSize);

// "count,size,last" with no whitespace.
std::string render_header(const SegmentPlan& plan);
SegmentPlan parse_header(std::string_view text);

// b64_encode(aes128_encrypt(pad16(raw))).
std::string encode_pipeline(const RawFile& raw, const CipherConfig& cfg);

// aes128_decrypt(truncate16(b64_decode(encoded))). The result keeps the zero
// padding tail; the original length is never transmitted.
Bytes decode_pipeline(std::string_view encoded, const CipherConfig& cfg);

// Length of encode_pipeline's output for an n-byte input.
std::size_t encoded_length(std::size_t raw_size);

}  // namespace fieldcam::pipeline
