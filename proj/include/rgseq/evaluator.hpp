#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgseq/model.hpp"
#include "rgseq/test_rules.hpp"
#include "rgseq/value_function.hpp"

namespace rgseq {

struct OperatingCharacteristics {
    double alpha = 0.0;
    double beta = 0.0;
    double K0 = 0.0;
    double K1 = 0.0;
    double E_tau_0 = 0.0;
    double E_tau_1 = 0.0;
    /// tail0[k-1] = P0(tau >= k), k = 1..stages+1 (same for tail1 under H1).
    std::vector<double> tail0;
    std::vector<double> tail1;
    /// Mass still continuing after the last computed stage.
    double truncation_mass0 = 0.0;
    double truncation_mass1 = 0.0;
    int stages = 0;
    /// True when both truncation masses fell below mass_tol.
    bool terminated = false;
    /// When a hypothesis keeps mass at the cap, its K and E_tau are lower bounds.
    bool K0_lower_bound = false;
    bool K1_lower_bound = false;
    /// max over stages of |continuing + stopped - 1| per hypothesis.
    double conservation_error = 0.0;
    /// |K from sum_k cbar_k P(tau >= k) - K accumulated along paths|.
    double cost_crosscheck_error = 0.0;
    std::size_t max_states = 0;
};

struct ExactOcOptions {
    int cap = 10000;
    double mass_tol = 1e-12;
    double merge_tol = 1e-12;
    std::size_t state_cap = 1'000'000;
};

/// Forward propagation of the likelihood-ratio atoms under both hypotheses.
OperatingCharacteristics exact_oc(const TestRule& rule, const KernelSequence& kernels,
                                  const ExactOcOptions& options = {});

/// K0 + lambda0 alpha + lambda1 beta.
double lagrangian(const OperatingCharacteristics& oc, const DesignParams& params);

struct TailFit {
    double a = 0.0;
    double r_hat = 0.0;
    double slope = 0.0;
    int points = 0;
    bool degenerate = false;   // fewer than three positive tail values
    bool geometric = false;    // r_hat < 1 and not degenerate
    double hellinger_rate = 0.0;
    /// P0(tau >= k) <= r^{k-1} / sqrt(A) for k >= 2 (RSPRT started at z = 1).
    bool hellinger_bound_ok = true;
    /// tail_k <= a r_hat^k over the fitted range (true by construction of a).
    bool envelope_ok = true;
    std::string diagnosis;
};

/// Least-squares fit of log P(tau >= k) against k over the positive part of a tail.
/// `A` (lower threshold) and `hellinger_rate` enable the Markov-inequality bound
/// check; pass A <= 0 to skip it.
TailFit tail_decay_check(const std::vector<double>& tail, double hellinger_rate = 0.0,
                         double A = 0.0);

}  // namespace rgseq
