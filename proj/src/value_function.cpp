#include "rgseq/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

void validate(const DesignParams& params) {
    if (!(params.lambda0 > 0.0) || !(params.lambda1 > 0.0) || !std::isfinite(params.lambda0) ||
        !std::isfinite(params.lambda1)) {
        std::ostringstream os;
        os << "multipliers must be positive, got lambda0=" << params.lambda0
           << " lambda1=" << params.lambda1;
        throw Error(ErrorCode::InvalidArgument, os.str());
    }
}

double g(double z, const DesignParams& params) {
    if (std::isinf(z)) return params.lambda0;
    return std::min(params.lambda0, params.lambda1 * z);
}

ValueFunction::ValueFunction(std::shared_ptr<const LogGrid> grid, std::vector<double> values,
                             double lower_slope, double upper_limit, double at_infinity)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      lower_slope_(lower_slope),
      upper_limit_(upper_limit),
      at_infinity_(at_infinity) {
    if (!grid_ || grid_->size() != values_.size()) {
        throw Error(ErrorCode::InvalidArgument, "value function does not match its grid");
    }
}

double ValueFunction::node_value(long i) const {
    if (i < 0) return lower_slope_ * grid_->node(i);
    if (static_cast<std::size_t>(i) >= values_.size()) return upper_limit_;
    return values_[i];
}

double ValueFunction::operator()(double z) const {
    if (!(z > 0.0)) return 0.0;
    if (std::isinf(z)) return at_infinity_;
    const long n = static_cast<long>(values_.size());
    if (z < grid_->front()) {
        if (z < grid_->node(-1)) return lower_slope_ * z;
    } else if (z > grid_->back() && z >= grid_->node(n)) {
        return upper_limit_;
    }
    const long i = grid_->cell(z);
    const double z0 = grid_->node(i);
    const double a = node_value(i);
    if (z == z0) return a;
    const double b = node_value(i + 1);
    const double t = (z - z0) / (grid_->node(i + 1) - z0);
    return a + t * (b - a);
}

ValueFunction terminal_value(std::shared_ptr<const LogGrid> grid, const DesignParams& params) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = g(grid->nodes()[i], params);
    return ValueFunction(std::move(grid), std::move(v), params.lambda1, params.lambda0,
                         params.lambda0);
}

SmoothingPlan make_smoothing_plan(std::shared_ptr<const LogGrid> grid, const LrDistribution& lr) {
    SmoothingPlan plan;
    plan.p0_positive = lr.p0_positive();
    plan.p1_finite = lr.p1_finite();
    const double h = grid->step();
    std::ptrdiff_t min_off = 0, max_off = 0;
    for (const auto& a : lr.atoms()) {
        if (!std::isfinite(a.log_lr) || a.p0 <= 0.0) continue;
        const double s = a.log_lr / h;
        const double r = std::round(s);
        if (std::abs(s - r) <= 1e-9 * std::max(1.0, std::abs(s))) {
            plan.taps.push_back({static_cast<std::ptrdiff_t>(r), a.p0});
        } else {
            const double k = std::floor(s);
            const double t = std::expm1(a.log_lr - k * h) / std::expm1(h);
            const auto off = static_cast<std::ptrdiff_t>(k);
            plan.taps.push_back({off, a.p0 * (1.0 - t)});
            plan.taps.push_back({off + 1, a.p0 * t});
        }
    }
    for (const auto& t : plan.taps) {
        min_off = std::min(min_off, t.offset);
        max_off = std::max(max_off, t.offset);
    }
    plan.pad_lo = static_cast<std::size_t>(-min_off);
    plan.pad_hi = static_cast<std::size_t>(max_off);
    plan.grid = std::move(grid);
    return plan;
}

ValueFunction smooth(const ValueFunction& v, const SmoothingPlan& plan) {
    if (v.grid_ptr() != plan.grid && v.grid().nodes() != plan.grid->nodes()) {
        throw Error(ErrorCode::InvalidArgument, "smoothing plan built for a different grid");
    }
    const std::size_t n = v.values().size();
    std::vector<double> padded(plan.pad_lo + n + plan.pad_hi);
    for (std::size_t p = 0; p < padded.size(); ++p) {
        padded[p] = v.node_value(static_cast<long>(p) - static_cast<long>(plan.pad_lo));
    }
    std::vector<double> out(n);
    kernels::stencil(padded, plan.pad_lo, plan.taps, out);
    return ValueFunction(v.grid_ptr(), std::move(out), v.lower_slope() * plan.p1_finite,
                         plan.p0_positive * v.upper_limit(), plan.p0_positive * v.at_infinity());
}

ValueFunction smooth(const ValueFunction& v, const StageKernel& kernel) {
    return smooth(v, make_smoothing_plan(v.grid_ptr(), kernel.group_lr));
}

namespace {

std::shared_ptr<const LogGrid> grid_for_atoms(const GridSpec& spec, const LrDistribution& atoms,
                                              const DesignParams& params) {
    validate(params);
    if (spec.points < 3 || !(spec.span_hi > spec.span_lo) || !(spec.span_lo > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "invalid grid specification");
    }
    const double default_step =
        std::log(spec.span_hi / spec.span_lo) / static_cast<double>(spec.points - 1);
    const auto lattice = lattice_step(atoms, default_step / 4.0);
    return std::make_shared<const LogGrid>(make_grid(spec, params.decision_threshold(), lattice));
}

}  // namespace

std::shared_ptr<const LogGrid> grid_for(const GridSpec& spec, const StageKernel& kernel,
                                        const DesignParams& params) {
    return grid_for_atoms(spec, kernel.group_lr, params);
}

std::shared_ptr<const LogGrid> grid_for(const GridSpec& spec, const KernelSequence& kernels,
                                        const DesignParams& params) {
    std::vector<LrAtom> all = kernels.tail().group_lr.atoms();
    for (std::size_t k = 1; k <= kernels.prefix_length(); ++k) {
        const auto& a = kernels.at(static_cast<int>(k)).group_lr.atoms();
        all.insert(all.end(), a.begin(), a.end());
    }
    return grid_for_atoms(spec, LrDistribution(std::move(all)), params);
}

}  // namespace rgseq
