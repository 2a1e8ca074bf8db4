#pragma once

#include <cstdint>
#include <optional>

#include "rgseq/model.hpp"
#include "rgseq/test_rules.hpp"

namespace rgseq {

enum class Hypothesis { H0, H1 };

struct SimulationOptions {
    std::uint64_t reps = 100000;
    std::uint64_t seed = 20240101;
    int cap = 10000;
    /// 0 picks the hardware concurrency.
    unsigned threads = 0;
};

/// Monte Carlo estimate with its standard error (nullopt when reps < 2).
struct Estimate {
    double value = 0.0;
    std::optional<double> std_error;
};

struct SimulationReport {
    Hypothesis hypothesis = Hypothesis::H0;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
    /// Probability of stopping and rejecting H0, and of stopping and accepting it.
    Estimate reject;
    Estimate accept;
    /// Expected cost; censored replications contribute their cost so far.
    Estimate K;
    Estimate E_tau;
    std::uint64_t cap_hits = 0;
    bool K_lower_bound = false;

    /// alpha under H0, beta under H1.
    Estimate error_probability() const;
};

/// Replication r draws group sizes, observations and boundary randomization
/// from Philox stream r, so the result does not depend on the thread count.
SimulationReport simulate(const TestRule& rule, const ObservationModel& model,
                          const GroupSizeModel& groups, const CostModel& cost,
                          Hypothesis hypothesis, const SimulationOptions& options = {});

}  // namespace rgseq
