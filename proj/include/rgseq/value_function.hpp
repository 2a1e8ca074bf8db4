#pragma once

#include <memory>
#include <vector>

#include "rgseq/grid.hpp"
#include "rgseq/kernels.hpp"
#include "rgseq/model.hpp"

namespace rgseq {

/// Lagrange multipliers on the type I (lambda0) and type II (lambda1) error.
struct DesignParams {
    double lambda0 = 1.0;
    double lambda1 = 1.0;

    double decision_threshold() const { return lambda0 / lambda1; }
};

void validate(const DesignParams& params);

/// Terminal loss min{lambda0, lambda1 z}; g(+inf) = lambda0.
double g(double z, const DesignParams& params);

/// Piecewise-linear function of z on a log grid.
///
/// Between adjacent nodes of the (infinite) log grid the function is linear in
/// z. Stored values cover the real nodes; virtual nodes below the grid carry
/// lower_slope * z and virtual nodes above carry upper_limit. V(0) = 0 and
/// V(+inf) = at_infinity.
class ValueFunction {
public:
    ValueFunction(std::shared_ptr<const LogGrid> grid, std::vector<double> values,
                  double lower_slope, double upper_limit, double at_infinity);

    double operator()(double z) const;

    /// Value at any (possibly virtual) node index.
    double node_value(long i) const;

    const LogGrid& grid() const { return *grid_; }
    const std::shared_ptr<const LogGrid>& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double lower_slope() const { return lower_slope_; }
    double upper_limit() const { return upper_limit_; }
    double at_infinity() const { return at_infinity_; }
    void set_upper_limit(double v) { upper_limit_ = v; }

private:
    std::shared_ptr<const LogGrid> grid_;
    std::vector<double> values_;
    double lower_slope_;
    double upper_limit_;
    double at_infinity_;
};

/// g sampled on a grid, with the matching extensions.
ValueFunction terminal_value(std::shared_ptr<const LogGrid> grid, const DesignParams& params);

/// Precomputed stencil that applies V -> sum_atoms p0 V(z e^{log_lr}) on one grid.
///
/// On a log-uniform grid the interpolation weight of an atom does not depend on
/// the node, so smoothing is a fixed shifted-stencil sum.
struct SmoothingPlan {
    std::shared_ptr<const LogGrid> grid;
    std::vector<kernels::StencilTap> taps;
    std::size_t pad_lo = 0;
    std::size_t pad_hi = 0;
    double p0_positive = 1.0;  // H0 mass of atoms with z > 0
    double p1_finite = 1.0;    // E0 of the group likelihood ratio
};

SmoothingPlan make_smoothing_plan(std::shared_ptr<const LogGrid> grid, const LrDistribution& lr);

/// Vbar(z) = sum_n p(n) E0 V(z z_n). Atoms with z_n = 0 contribute V(0) = 0 and
/// the z_n = +inf atom has no H0 mass.
ValueFunction smooth(const ValueFunction& v, const SmoothingPlan& plan);
ValueFunction smooth(const ValueFunction& v, const StageKernel& kernel);

/// Pick the grid for a kernel and design: lattice-aligned when the kernel's
/// log-LR atoms sit on a lattice.
std::shared_ptr<const LogGrid> grid_for(const GridSpec& spec, const StageKernel& kernel,
                                        const DesignParams& params);
/// Same, with a lattice common to every kernel of the sequence.
std::shared_ptr<const LogGrid> grid_for(const GridSpec& spec, const KernelSequence& kernels,
                                        const DesignParams& params);

}  // namespace rgseq
