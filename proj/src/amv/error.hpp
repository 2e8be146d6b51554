#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace amv {

enum class ErrorCode {
    InvalidInput = 1,
    UnsupportedStrategy,
    UnsupportedMode,
    UnsupportedSpace,
    ConvergenceFailure,
    NumericFailure,
    Io,
    BudgetExhausted,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the iterative eigensolver when the restart budget runs out.
/// Carries the best residuals reached so callers can decide what to do.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, std::vector<double> best_residuals)
        : Error(ErrorCode::ConvergenceFailure, what), residuals_(std::move(best_residuals)) {}

    const std::vector<double>& best_residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::InvalidInput, what);
}

}  // namespace amv
