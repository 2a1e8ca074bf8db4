#pragma once

#include <cmath>
#include <vector>

#include "rgseq/model.hpp"

namespace rgseq::fixtures {

inline ObservationModel bernoulli() { return make_model({0.7, 0.3}, {0.3, 0.7}); }
inline ObservationModel uniform_pair() { return make_model({0.5, 0.5}, {1.0, 0.0}); }

inline StageKernel kernel_of(const ObservationModel& m, std::vector<int> support,
                             std::vector<double> pmf, const CostModel& cost) {
    return make_stage_kernel(m, support, pmf, cost);
}

/// One observation per group at a constant cost.
inline StageKernel single(const ObservationModel& m, double cost) {
    return kernel_of(m, {1}, {1.0}, CostModel::constant(cost));
}

inline KernelSequence sequence_of(StageKernel k) { return KernelSequence(std::move(k)); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace rgseq::fixtures
