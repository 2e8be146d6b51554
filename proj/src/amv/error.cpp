#include "amv/error.hpp"

namespace amv {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::UnsupportedStrategy: return "unsupported-strategy";
        case ErrorCode::UnsupportedMode: return "unsupported-mode";
        case ErrorCode::UnsupportedSpace: return "unsupported-space";
        case ErrorCode::ConvergenceFailure: return "convergence-failure";
        case ErrorCode::NumericFailure: return "numeric-failure";
        case ErrorCode::Io: return "io-error";
        case ErrorCode::BudgetExhausted: return "budget-exhausted";
    }
    return "unknown";
}

}  // namespace amv
