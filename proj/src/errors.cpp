#include "invdp/errors.hpp"

namespace invdp {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::CutLocus: return "CutLocus";
        case ErrorCode::GroupMismatch: return "GroupMismatch";
        case ErrorCode::NotSkew: return "NotSkew";
        case ErrorCode::Singular: return "Singular";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotQuadratic: return "NotQuadratic";
        case ErrorCode::MuOutOfRange: return "MuOutOfRange";
        case ErrorCode::UnsupportedCombination: return "UnsupportedCombination";
        case ErrorCode::GapDegenerate: return "GapDegenerate";
        case ErrorCode::ConeViolation: return "ConeViolation";
        case ErrorCode::NonPositive: return "NonPositive";
        case ErrorCode::DegenerateDirection: return "DegenerateDirection";
        case ErrorCode::FieldBlowUp: return "FieldBlowUp";
        case ErrorCode::MissingLinearization: return "MissingLinearization";
        case ErrorCode::DomainViolation: return "DomainViolation";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::InvalidWeights: return "InvalidWeights";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::DependentBasis: return "DependentBasis";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace invdp
