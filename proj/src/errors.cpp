#include "rgseq/errors.hpp"

namespace rgseq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotAPmf: return "NotAPmf";
        case ErrorCode::IndistinguishableHypotheses: return "IndistinguishableHypotheses";
        case ErrorCode::AtomExplosion: return "AtomExplosion";
        case ErrorCode::ZeroCost: return "ZeroCost";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::GridTooNarrow: return "GridTooNarrow";
        case ErrorCode::InvalidHorizon: return "InvalidHorizon";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::TrivialDesign: return "TrivialDesign";
        case ErrorCode::NoRoot: return "NoRoot";
        case ErrorCode::BadThresholds: return "BadThresholds";
        case ErrorCode::NonIntervalContinuation: return "NonIntervalContinuation";
        case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace rgseq
