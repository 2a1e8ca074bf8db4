#pragma once

#include <memory>
#include <vector>

#include "rgseq/grid.hpp"
#include "rgseq/model.hpp"
#include "rgseq/value_function.hpp"

namespace rgseq {

/// Finite-horizon value functions V_k^N, k = 1..N, and their smoothings.
struct ValueLadder {
    int horizon = 0;
    DesignParams params;
    std::shared_ptr<const LogGrid> grid;
    std::vector<ValueFunction> stage;     // stage[k-1] = V_k^N
    std::vector<ValueFunction> smoothed;  // smoothed[k-1] = Vbar_k^N, built with kernel k
    std::vector<double> mean_cost;        // mean_cost[k-1] = cbar_k
    double lower_bound = 0.0;             // cbar_1 + Vbar_1^N(1)

    const ValueFunction& V(int k) const { return stage.at(k - 1); }
    const ValueFunction& V_bar(int k) const { return smoothed.at(k - 1); }
};

ValueLadder backward_induction(const KernelSequence& kernels, const DesignParams& params,
                               int horizon, const GridSpec& spec = {});
ValueLadder backward_induction(const KernelSequence& kernels, const DesignParams& params,
                               int horizon, std::shared_ptr<const LogGrid> grid);

/// One Bellman step: min{g, c + Vbar}, including the extension scalars.
ValueFunction bellman_step(const ValueFunction& g_values, const ValueFunction& v_bar, double cost,
                           const DesignParams& params);

struct FixedPointOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    GridSpec grid;
    /// Keep every iterate rho_0, rho_1, ... (memory grows with the iteration count).
    bool keep_iterates = false;
};

/// Stationary value rho(.; c, lambda0, lambda1) and its smoothing.
struct StationaryValue {
    DesignParams params;
    double c = 0.0;
    ValueFunction rho;
    ValueFunction rho_bar;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residuals;       // sup |rho_k - rho_{k-1}| per iteration
    double monotonicity_violation = 0.0; // max over k of (rho_k - rho_{k-1})^+
    std::vector<ValueFunction> iterates; // filled when keep_iterates
    /// Grid request that produced `rho` (after any widening).
    GridSpec grid_spec;
};

/// Iterates rho_k = min{g, c + rho_bar_{k-1}} from rho_0 = g until the sup-norm
/// change drops below tol. Throws NoConvergence after max_iter. Without an
/// explicit grid, the span of options.grid is widened while the continuation
/// set reaches a grid edge.
StationaryValue stationary_value(const StageKernel& kernel, double c, const DesignParams& params,
                                 const FixedPointOptions& options = {});
StationaryValue stationary_value(const StageKernel& kernel, double c, const DesignParams& params,
                                 std::shared_ptr<const LogGrid> grid,
                                 const FixedPointOptions& options = {});

/// Normalized form with lambda1 = 1 and lambda0 = lambda.
StationaryValue rho_fixed_point(const StageKernel& kernel, double c, double lambda,
                                const FixedPointOptions& options = {});

/// The first `count` iterates rho_0 .. rho_{count-1} on a given grid.
std::vector<ValueFunction> rho_iterates(const StageKernel& kernel, double c,
                                        const DesignParams& params,
                                        std::shared_ptr<const LogGrid> grid, int count);

/// cbar_1 + Vbar_1(1).
double lagrangian_lower_bound(const ValueLadder& ladder);
double lagrangian_lower_bound(const StationaryValue& value);

}  // namespace rgseq
