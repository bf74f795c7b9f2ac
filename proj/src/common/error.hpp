#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldcam {

enum class ErrorCode {
  InvalidArgument,
  EmptyFile,
  UnpaddedInput,
  InvalidEncoding,
  TooShort,
  ExceedsModemLimit,
  MalformedHeader,
  MalformedPacket,
  LengthOverflow,
  ProtocolViolation,
  AlreadyPowered,
  PoweredOff,
  CaptureFailed,
  InconsistentTotals,
  DivisionByZero,
  AuthFailed,
  NotFound,
  Conflict,
  Io,
  Config,
  Network,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fieldcam
