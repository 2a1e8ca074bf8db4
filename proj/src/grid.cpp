#include "rgseq/grid.hpp"

#include <cmath>

#include "rgseq/errors.hpp"

namespace rgseq {

LogGrid::LogGrid(double anchor, double step, long j_min, std::size_t size)
    : anchor_(anchor), step_(step), j_min_(j_min), nodes_(size) {
    for (std::size_t i = 0; i < size; ++i) {
        const long j = j_min + static_cast<long>(i);
        nodes_[i] = j == 0 ? anchor : anchor * std::exp(static_cast<double>(j) * step);
    }
}

double LogGrid::node(long i) const {
    if (i >= 0 && static_cast<std::size_t>(i) < nodes_.size()) return nodes_[i];
    return anchor_ * std::exp(static_cast<double>(j_min_ + i) * step_);
}

long LogGrid::cell(double z) const {
    const double u = std::log(z / anchor_) / step_ - static_cast<double>(j_min_);
    long i = static_cast<long>(std::floor(u));
    // The log estimate can be off by one near a node; settle it by comparing nodes.
    while (z < node(i)) --i;
    while (z >= node(i + 1)) ++i;
    return i;
}

LogGrid make_grid(const GridSpec& spec, double center, std::optional<double> lattice) {
    if (!(spec.span_lo > 0.0) || !(spec.span_hi > spec.span_lo) || spec.points < 3 ||
        !(center > 0.0) || !(spec.anchor > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "invalid grid specification");
    }
    const double lo = std::log(spec.span_lo * center / spec.anchor);
    const double hi = std::log(spec.span_hi * center / spec.anchor);
    double step = (hi - lo) / static_cast<double>(spec.points - 1);
    if (spec.align_to_lattice && lattice) {
        const double m = std::ceil(*lattice / step - 1e-9);
        step = *lattice / m;
    }
    const long j_min = static_cast<long>(std::floor(lo / step));
    const long j_max = static_cast<long>(std::ceil(hi / step));
    return LogGrid(spec.anchor, step, j_min, static_cast<std::size_t>(j_max - j_min + 1));
}

}  // namespace rgseq
