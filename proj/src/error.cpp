#include "covsamp/error.hpp"

namespace covsamp {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::InsufficientGrid: return "InsufficientGrid";
        case ErrorCode::SingularSubmatrix: return "SingularSubmatrix";
        case ErrorCode::DegenerateTarget: return "DegenerateTarget";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::InternalConsistency: return "InternalConsistency";
        case ErrorCode::Overflow: return "Overflow";
    }
    return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::InvalidParameter:
        case ErrorCode::ConfigError:
        case ErrorCode::ParseError:
        case ErrorCode::MissingColumn:
        case ErrorCode::InsufficientGrid:
            return 2;
        case ErrorCode::SingularSubmatrix:
        case ErrorCode::DegenerateTarget:
        case ErrorCode::NotPositiveDefinite:
        case ErrorCode::ZeroDenominator:
        case ErrorCode::InternalConsistency:
            return 3;
        case ErrorCode::Overflow:
            return 4;
    }
    return 1;
}

}  // namespace covsamp
