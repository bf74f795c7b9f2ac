#pragma once

#include <string>
#include <string_view>

#include "common/bytes.hpp"

namespace fieldcam::pipeline {

// RFC 4648 standard alphabet, '=' padded, no line breaks.
std::string b64_encode(ByteView data);

// Trailing ASCII whitespace is ignored. Any other character outside the
// alphabet, or a length that is not a multiple of four, is InvalidEncoding.
Bytes b64_decode(std::string_view text);

}  // namespace fieldcam::pipeline
