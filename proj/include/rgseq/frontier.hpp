#pragma once

#include <optional>
#include <vector>

#include "rgseq/evaluator.hpp"
#include "rgseq/grid.hpp"
#include "rgseq/model.hpp"
#include "rgseq/test_rules.hpp"

namespace rgseq {

struct FrontierOptions {
    double alpha_target = 0.05;
    double beta_target = 0.05;
    GridSpec grid;
    /// Search bracket for both multipliers, as multiples of the mean stage cost
    /// unless absolute bounds are given.
    double lambda_lo_factor = 1e-3;
    double lambda_hi_factor = 1e6;
    std::optional<double> lambda_max;
    /// Relative width at which a bisection stops.
    double rel_tol = 1e-2;
    /// Factor by which the upper lambda0 bound shrinks after an unsolvable probe.
    double top_backoff = 10.0;
    int max_probes = 2000;
    ExactOcOptions oc;
};

struct FrontierProbe {
    DesignParams params;
    bool trivial = false;
    TestRule rule;
    OperatingCharacteristics oc;

    bool meets(double alpha_target, double beta_target) const {
        return oc.alpha <= alpha_target && oc.beta <= beta_target;
    }
};

struct FrontierResult {
    bool met = false;
    /// The returned design: feasible when `met`, otherwise the probe closest to
    /// the targets in max(alpha/alpha*, beta/beta*).
    FrontierProbe design;
    int probes = 0;
    int failed_probes = 0;
    double c = 0.0;
};

/// Optimal stationary design for multipliers (lambda0, lambda1) at cost scale c,
/// evaluated exactly. Strictly trivial designs yield the one-stage rule.
FrontierProbe probe_design(const KernelSequence& kernels, double c, const DesignParams& params,
                           const GridSpec& grid, const ExactOcOptions& oc);

/// Searches the multipliers by nested bisection in log scale: the outer search
/// raises lambda1 until beta <= beta*, the inner one the smallest lambda0 with
/// alpha <= alpha* for that lambda1. Every returned design is exactly evaluated.
FrontierResult search_frontier(const KernelSequence& kernels, const FrontierOptions& options);

}  // namespace rgseq
