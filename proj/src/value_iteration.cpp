#include "rgseq/value_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "rgseq/errors.hpp"
#include "rgseq/kernels.hpp"

namespace rgseq {

ValueFunction bellman_step(const ValueFunction& g_values, const ValueFunction& v_bar, double cost,
                           const DesignParams& params) {
    std::vector<double> out(g_values.values().size());
    kernels::bellman(g_values.values(), v_bar.values(), cost, out);
    const double cont_limit = cost + v_bar.upper_limit();
    const double upper = cont_limit < params.lambda0 ? cont_limit : params.lambda0;
    return ValueFunction(g_values.grid_ptr(), std::move(out), params.lambda1, upper,
                         params.lambda0);
}

ValueLadder backward_induction(const KernelSequence& kernels, const DesignParams& params,
                               int horizon, std::shared_ptr<const LogGrid> grid) {
    validate(params);
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidHorizon,
                    "horizon must be at least 1, got " + std::to_string(horizon));
    }
    ValueLadder ladder;
    ladder.horizon = horizon;
    ladder.params = params;
    ladder.grid = grid;

    const ValueFunction g_values = terminal_value(grid, params);
    std::vector<ValueFunction> stage(horizon, g_values);
    std::vector<ValueFunction> smoothed(horizon, g_values);
    std::vector<double> costs(horizon);
    for (int k = horizon; k >= 1; --k) {
        const StageKernel& kernel = kernels.at(k);
        costs[k - 1] = kernel.mean_cost;
        smoothed[k - 1] = smooth(stage[k - 1], kernel);
        if (k > 1) stage[k - 2] = bellman_step(g_values, smoothed[k - 1], kernel.mean_cost, params);
    }
    ladder.stage = std::move(stage);
    ladder.smoothed = std::move(smoothed);
    ladder.mean_cost = std::move(costs);
    ladder.lower_bound = ladder.mean_cost[0] + ladder.smoothed[0](1.0);
    return ladder;
}

ValueLadder backward_induction(const KernelSequence& kernels, const DesignParams& params,
                               int horizon, const GridSpec& spec) {
    if (horizon < 1) {
        throw Error(ErrorCode::InvalidHorizon,
                    "horizon must be at least 1, got " + std::to_string(horizon));
    }
    return backward_induction(kernels, params, horizon, grid_for(spec, kernels, params));
}

StationaryValue stationary_value(const StageKernel& kernel, double c, const DesignParams& params,
                                 std::shared_ptr<const LogGrid> grid,
                                 const FixedPointOptions& options) {
    validate(params);
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw Error(ErrorCode::InvalidArgument, "cost scale c must be positive");
    }
    const SmoothingPlan plan = make_smoothing_plan(grid, kernel.group_lr);
    const ValueFunction g_values = terminal_value(grid, params);

    StationaryValue out{params, c, g_values, smooth(g_values, plan), 0, false, {}, 0.0, {}};
    if (options.keep_iterates) out.iterates.push_back(g_values);

    ValueFunction prev = g_values;
    ValueFunction prev_bar = out.rho_bar;
    for (int it = 1; it <= options.max_iter; ++it) {
        ValueFunction next = bellman_step(g_values, prev_bar, c, params);
        double diff = kernels::max_abs_diff(next.values(), prev.values());
        diff = std::max(diff, std::abs(next.upper_limit() - prev.upper_limit()));
        double rise = next.upper_limit() - prev.upper_limit();
        for (std::size_t i = 0; i < next.values().size(); ++i) {
            rise = std::max(rise, next.values()[i] - prev.values()[i]);
        }
        out.monotonicity_violation = std::max(out.monotonicity_violation, rise);
        out.residuals.push_back(diff);
        ValueFunction next_bar = smooth(next, plan);
        if (options.keep_iterates) out.iterates.push_back(next);
        prev = std::move(next);
        prev_bar = std::move(next_bar);
        out.iterations = it;
        if (diff < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.rho = std::move(prev);
    out.rho_bar = std::move(prev_bar);
    if (!out.converged) {
        std::ostringstream os;
        os << "rho iteration did not converge in " << options.max_iter
           << " iterations; last residual " << out.residuals.back() << " (tol " << options.tol
           << ")";
        throw Error(ErrorCode::NoConvergence, os.str());
    }
    return out;
}

namespace {

// Does the continuation set {g > c + rho_bar} touch an edge of the grid where the
// extension values are only exact outside the continuation set?
std::pair<bool, bool> continuation_at_edges(const StationaryValue& v) {
    const auto& nodes = v.rho_bar.grid().nodes();
    const double tol = 1e-12 * v.params.lambda0;
    auto gain = [&](std::size_t i) { return g(nodes[i], v.params) - v.c - v.rho_bar.values()[i]; };
    const bool lower = gain(0) > tol;
    const bool bounded_above = v.params.lambda0 - v.c - v.rho_bar.upper_limit() <= tol;
    const bool upper = bounded_above && gain(nodes.size() - 1) > tol;
    return {lower, upper};
}

}  // namespace

StationaryValue stationary_value(const StageKernel& kernel, double c, const DesignParams& params,
                                 const FixedPointOptions& options) {
    // The extensions beyond the grid are exact once the grid reaches past both
    // thresholds, so widen the span (at the same resolution) until it does.
    constexpr double kMaxLogSpan = 460.0;  // |log(z / d)| stays below this
    GridSpec spec = options.grid;
    const double step = std::log(spec.span_hi / spec.span_lo) / static_cast<double>(spec.points - 1);
    for (;;) {
        StationaryValue out = stationary_value(kernel, c, params, grid_for(spec, kernel, params), options);
        out.grid_spec = spec;
        const auto [lower, upper] = continuation_at_edges(out);
        double lo = std::log(spec.span_lo), hi = std::log(spec.span_hi);
        const double lo0 = lo, hi0 = hi;
        if (lower) lo = std::max(2.0 * lo, -kMaxLogSpan);
        if (upper) hi = std::min(2.0 * hi, kMaxLogSpan);
        if (lo == lo0 && hi == hi0) return out;
        spec.span_lo = std::exp(lo);
        spec.span_hi = std::exp(hi);
        spec.points = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    }
}

StationaryValue rho_fixed_point(const StageKernel& kernel, double c, double lambda,
                                const FixedPointOptions& options) {
    return stationary_value(kernel, c, DesignParams{lambda, 1.0}, options);
}

std::vector<ValueFunction> rho_iterates(const StageKernel& kernel, double c,
                                        const DesignParams& params,
                                        std::shared_ptr<const LogGrid> grid, int count) {
    validate(params);
    const SmoothingPlan plan = make_smoothing_plan(grid, kernel.group_lr);
    const ValueFunction g_values = terminal_value(grid, params);
    std::vector<ValueFunction> out;
    out.reserve(std::max(count, 0));
    if (count <= 0) return out;
    out.push_back(g_values);
    while (static_cast<int>(out.size()) < count) {
        out.push_back(bellman_step(g_values, smooth(out.back(), plan), c, params));
    }
    return out;
}

double lagrangian_lower_bound(const ValueLadder& ladder) { return ladder.lower_bound; }

double lagrangian_lower_bound(const StationaryValue& value) {
    return value.c + value.rho_bar(1.0);
}

}  // namespace rgseq
