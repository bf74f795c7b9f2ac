#include "common/error.hpp"

namespace fieldcam {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::UnpaddedInput: return "UnpaddedInput";
    case ErrorCode::InvalidEncoding: return "InvalidEncoding";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ExceedsModemLimit: return "ExceedsModemLimit";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedPacket: return "MalformedPacket";
    case ErrorCode::LengthOverflow: return "LengthOverflow";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::AlreadyPowered: return "AlreadyPowered";
    case ErrorCode::PoweredOff: return "PoweredOff";
    case ErrorCode::CaptureFailed: return "CaptureFailed";
    case ErrorCode::InconsistentTotals: return "InconsistentTotals";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Network: return "Network";
  }
  return "Unknown";
}

}  // namespace fieldcam
