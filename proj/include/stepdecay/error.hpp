#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stepdecay {

enum class ErrorCode {
    InvalidInstance,
    InvalidStep,
    OutOfHorizon,
    InvalidInput,
    InvalidSchedule,
    ZeroStep,
    Divergent,
    NormalizationUndefined,
    MissingConfig,
    Config,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can map it to an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace stepdecay
