#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rgseq {

enum class ErrorCode {
    NotAPmf,
    IndistinguishableHypotheses,
    AtomExplosion,
    ZeroCost,
    InvalidArgument,
    GridTooNarrow,
    InvalidHorizon,
    NoConvergence,
    TrivialDesign,
    NoRoot,
    BadThresholds,
    NonIntervalContinuation,
    StateSpaceTooLarge,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported through this one exception type; the
/// code says which contract was violated, the message carries the numbers.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rgseq
