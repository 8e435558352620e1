#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covsamp {

enum class ErrorCode {
    InvalidArgument,
    InvalidParameter,
    ConfigError,
    ParseError,
    MissingColumn,
    InsufficientGrid,
    SingularSubmatrix,
    DegenerateTarget,
    NotPositiveDefinite,
    ZeroDenominator,
    InternalConsistency,
    Overflow,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Process exit status for an error: 2 config, 3 numeric, 4 resource cap.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace covsamp
