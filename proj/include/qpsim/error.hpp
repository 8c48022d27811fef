#pragma once

#include <stdexcept>
#include <string>

namespace qps {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    TooFewSamples,
    ToleranceUnreachable,
    Resonance,
    DiophantineViolation,
    IllConditioned,
    NonConvergence,
    DomainError,
    Config,
    Io,
};

const char* to_string(ErrorCode code);

/// Error carried across module boundaries; `field` names the offending input when known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

}  // namespace qps
