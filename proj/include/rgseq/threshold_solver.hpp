#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "rgseq/model.hpp"
#include "rgseq/value_iteration.hpp"

namespace rgseq {

/// g(z) - c - rho_bar(z): positive where continuing beats stopping.
double continuation_gain(const StationaryValue& value, double z);

/// lambda0 <= c + rho_bar(lambda0/lambda1). `tol` is relative to lambda0 and
/// absorbs rounding at the boundary case.
bool is_trivial(const StationaryValue& value, double tol = 1e-12);
/// lambda0 < c + rho_bar(lambda0/lambda1) by more than the tolerance.
bool is_strictly_trivial(const StationaryValue& value, double tol = 1e-12);

struct Thresholds {
    double A = 0.0;
    double B = 0.0;  // +inf when no upper threshold exists
    double c = 0.0;
    DesignParams params;
    bool upper_exists = true;
    double residual_A = 0.0;  // |g(A) - c - rho_bar(A)|
    double residual_B = 0.0;
    bool sign_pattern_ok = false;
    std::vector<std::string> warnings;
};

/// Continuation interval (A, B) of a nontrivial stationary design, found by
/// bisection in log z. Throws TrivialDesign or GridTooNarrow.
Thresholds solve_thresholds(const StationaryValue& value, double root_tol = 1e-12);

/// Thread-safe memo of stationary values keyed on (c, lambda) rounded to 12
/// significant digits. Normalized designs only (lambda1 = 1).
class RhoCache {
public:
    RhoCache(const StageKernel& kernel, FixedPointOptions options);

    std::shared_ptr<const StationaryValue> get(double c, double lambda);
    std::size_t size() const;
    const StageKernel& kernel() const { return kernel_; }

private:
    const StageKernel& kernel_;
    FixedPointOptions options_;
    mutable std::mutex mutex_;
    std::map<std::pair<double, double>, std::shared_ptr<const StationaryValue>> table_;
};

struct InverseDesignOptions {
    FixedPointOptions fixed_point{1e-12, 100000, {}, false};
    double root_tol = 1e-12;   // relative, on c and on the thresholds
    double outer_tol = 1e-10;  // relative, on lambda
    int max_iter = 200;
};

struct InverseDesign {
    double A = 0.0;
    double B = 0.0;
    double lambda = 0.0;
    double c = 0.0;
    double residual_A = 0.0;  // c + rho_bar(A) - A
    double residual_G = 0.0;  // lambda - rho_bar(B) - c
    double lambda_lo = 0.0;   // final bracket of the outer search
    double lambda_hi = 0.0;
    int outer_iterations = 0;
};

/// Finds (lambda, c) whose optimal stationary test has thresholds (A, B).
/// The inner search solves c + rho_bar(A; c, lambda) = A for c, the outer one
/// G(lambda) = lambda - rho_bar(B; c(lambda), lambda) - c(lambda) = 0.
InverseDesign design_from_thresholds(double A, double B, const StageKernel& kernel,
                                     const InverseDesignOptions& options = {});
InverseDesign design_from_thresholds(double A, double B, RhoCache& cache,
                                     const InverseDesignOptions& options = {});

/// R(z; c, lambda) = c + rho_bar(z; c, lambda), with rho_bar := 0 when c, lambda or z is 0.
double r_function(double z, double c, double lambda, const StageKernel& kernel,
                  const FixedPointOptions& options = {});

}  // namespace rgseq
