#pragma once

#include <cstdint>
#include <vector>

#include "rgseq/model.hpp"
#include "rgseq/test_rules.hpp"
#include "rgseq/value_function.hpp"

namespace rgseq {

struct BruteForceOptions {
    std::size_t max_states = 10000;  // reachable (stage, z) states
    int max_bits = 22;               // stop/continue decisions to enumerate
    double state_tol = 1e-9;         // log z tolerance for identifying states
    double optimum_tol = 1e-9;       // minimizers lie within this of the minimum
};

/// Every sample path of a horizon-N test, with the reachable (stage, z) states
/// at which a deterministic truncated rule has to choose between stopping and
/// continuing. A rule is a bit mask over these states (bit set = continue).
class TruncatedRuleSpace {
public:
    struct DecisionState {
        int stage;
        double log_z;
    };
    struct Outcome {
        double alpha = 0.0;
        double beta = 0.0;
        double K0 = 0.0;
        double K1 = 0.0;
        /// Decision states actually reached with positive probability.
        std::uint64_t reached = 0;
    };

    TruncatedRuleSpace(const KernelSequence& kernels, int horizon,
                       const BruteForceOptions& options = {});

    int horizon() const { return horizon_; }
    const std::vector<DecisionState>& states() const { return states_; }
    std::size_t bits() const { return states_.size(); }
    std::uint64_t rule_count() const { return std::uint64_t{1} << states_.size(); }
    /// Distinct log z values at which any path can stop.
    const std::vector<double>& terminal_log_z() const { return terminal_log_z_; }

    /// Operating characteristics of a mask with decision "reject iff z >= threshold"
    /// (or z > threshold when the tie goes to acceptance).
    Outcome evaluate(std::uint64_t mask, double log_threshold, DecisionTie tie) const;

    /// Mask with the bits of unreached states cleared.
    std::uint64_t canonical(std::uint64_t mask) const;

    /// Mask of a rule: continue bit where the rule continues surely.
    std::uint64_t mask_of(const TestRule& rule) const;

    /// Index of a state, or -1.
    int find_state(int stage, double log_z) const;

private:
    struct Step {
        int state;  // decision state index reached, or -1 at the horizon
        double log_z;
        double p0;  // cumulative path probability
        double p1;
        double cost;  // cumulative cost along the path
    };

    int horizon_;
    double state_tol_;
    std::vector<DecisionState> states_;
    std::vector<double> terminal_log_z_;
    /// paths_[p * horizon + (k-1)] = the path's position after group k.
    std::vector<Step> paths_;
    std::size_t path_count_ = 0;
};

struct BruteForceResult {
    int horizon = 0;
    DesignParams params;
    double min_lagrangian = 0.0;
    /// Canonical masks (unreached bits cleared) within optimum_tol of the minimum.
    std::vector<std::uint64_t> minimizers;
    std::uint64_t rules_enumerated = 0;
    std::vector<TruncatedRuleSpace::DecisionState> states;
};

/// Minimum Lagrangian over all deterministic truncated rules of horizon N with
/// the likelihood-ratio decision at lambda0/lambda1.
BruteForceResult brute_force_truncated_optimum(const KernelSequence& kernels,
                                               const DesignParams& params, int horizon,
                                               const BruteForceOptions& options = {});
BruteForceResult brute_force_truncated_optimum(const TruncatedRuleSpace& space,
                                               const DesignParams& params,
                                               const BruteForceOptions& options = {});

}  // namespace rgseq
