#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfrag {

enum class ErrorCode {
    InvalidArgument,
    InvalidDislocation,
    PureFragmentationExcluded,
    NegativeOrder,
    DomainTooSmall,
    SlopeUnattainable,
    HypothesisFailed,
    OutsideDomain,
    KillRateNegative,
    NotAbsorbed,
    UnsupportedRegime,
    TruncatedTrace,
    DriftConditionFailed,
    WrongSign,
    NotHomogeneous,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidDislocation: return "InvalidDislocation";
    case ErrorCode::PureFragmentationExcluded: return "PureFragmentationExcluded";
    case ErrorCode::NegativeOrder: return "NegativeOrder";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::SlopeUnattainable: return "SlopeUnattainable";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::KillRateNegative: return "KillRateNegative";
    case ErrorCode::NotAbsorbed: return "NotAbsorbed";
    case ErrorCode::UnsupportedRegime: return "UnsupportedRegime";
    case ErrorCode::TruncatedTrace: return "TruncatedTrace";
    case ErrorCode::DriftConditionFailed: return "DriftConditionFailed";
    case ErrorCode::WrongSign: return "WrongSign";
    case ErrorCode::NotHomogeneous: return "NotHomogeneous";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message starts with the code name so command-line users can grep for it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace gfrag
