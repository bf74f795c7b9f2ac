#pragma once

#include <array>
#include <cstdint>

#include "common/bytes.hpp"

namespace fieldcam::pipeline {

using AesKey = std::array<std::uint8_t, 16>;
using AesBlock = std::array<std::uint8_t, 16>;

// AES-128 block cipher (FIPS-197). Holds the expanded key schedule.
class Aes128 {
 public:
  explicit Aes128(const AesKey& key);

  AesBlock encrypt_block(const AesBlock& in) const;
  AesBlock decrypt_block(const AesBlock& in) const;

 private:
  std::array<std::array<std::uint8_t, 16>, 11> round_keys_{};
};

// ECB over whole buffers. Length must be a multiple of 16 (Error: UnpaddedInput).
//
// ECB leaks block equality and carries no integrity protection. It is what the
// device firmware speaks: the receiver only knows the key, never an IV.
Bytes ecb_encrypt(ByteView plain, const AesKey& key);
Bytes ecb_decrypt(ByteView cipher, const AesKey& key);

}  // namespace fieldcam::pipeline
