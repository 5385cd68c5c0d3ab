#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invdp {

enum class ErrorCode {
    CutLocus,
    GroupMismatch,
    NotSkew,
    Singular,
    DimensionMismatch,
    NotQuadratic,
    MuOutOfRange,
    UnsupportedCombination,
    GapDegenerate,
    ConeViolation,
    NonPositive,
    DegenerateDirection,
    FieldBlowUp,
    MissingLinearization,
    DomainViolation,
    OutOfDomain,
    InvalidWeights,
    BadParams,
    WindowTooShort,
    DependentBasis,
    InvalidArgument,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace invdp
