#include "qpsim/error.hpp"

namespace qps {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::TooFewSamples: return "too_few_samples";
        case ErrorCode::ToleranceUnreachable: return "tolerance_unreachable";
        case ErrorCode::Resonance: return "resonance";
        case ErrorCode::DiophantineViolation: return "diophantine_violation";
        case ErrorCode::IllConditioned: return "ill_conditioned";
        case ErrorCode::NonConvergence: return "non_convergence";
        case ErrorCode::DomainError: return "domain_error";
        case ErrorCode::Config: return "config";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace qps
