#include "stepdecay/error.hpp"

namespace stepdecay {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::OutOfHorizon: return "OutOfHorizon";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::ZeroStep: return "ZeroStep";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::NormalizationUndefined: return "NormalizationUndefined";
    case ErrorCode::MissingConfig: return "MissingConfig";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

}  // namespace stepdecay
