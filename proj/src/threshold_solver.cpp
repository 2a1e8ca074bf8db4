#include "rgseq/threshold_solver.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "rgseq/errors.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Boundary of {z : pred(z)} between lo (pred false) and hi (pred true), in log z.
double bisect_log(double lo, double hi, const std::function<bool(double)>& pred, double tol) {
    for (int it = 0; it < 2000; ++it) {
        const double a = std::min(lo, hi), b = std::max(lo, hi);
        if (b / a - 1.0 <= tol) break;
        const double mid = std::sqrt(a * b);
        if (mid <= a || mid >= b) break;
        (pred(mid) ? hi : lo) = mid;
    }
    return std::sqrt(lo * hi);
}

struct LogRoot {
    double value;
    double lo;
    double hi;
    int iterations;
};

// Root of f(log x) on [lo, hi] by TOMS 748, stopping once the bracket is
// narrower than tol in log x or |f| <= f_tol. The best point seen is returned.
template <class F>
LogRoot log_root(F f, double lo, double hi, double tol, int max_iter,
                 std::optional<double> f_lo = std::nullopt, std::optional<double> f_hi = std::nullopt,
                 double f_tol = 0.0) {
    struct Converged {};
    const double a = std::log(lo), b = std::log(hi);
    const double fa = f_lo ? *f_lo : f(a);
    const double fb = f_hi ? *f_hi : f(b);
    double best_x = std::abs(fa) <= std::abs(fb) ? a : b;
    double best_f = std::min(std::abs(fa), std::abs(fb));
    if (best_f <= f_tol) return {std::exp(best_x), lo, hi, 0};
    int evals = 0;
    const auto tracked = [&](double x) {
        const double v = f(x);
        ++evals;
        if (std::abs(v) < best_f) best_f = std::abs(v), best_x = x;
        if (best_f <= f_tol) throw Converged{};
        return v;
    };
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    const auto stop = [tol](double x, double y) { return std::abs(y - x) <= tol; };
    try {
        const auto r = boost::math::tools::toms748_solve(tracked, a, b, fa, fb, stop, iters);
        return {std::exp(best_x), std::exp(r.first), std::exp(r.second), evals};
    } catch (const Converged&) {
        return {std::exp(best_x), std::exp(best_x), std::exp(best_x), evals};
    } catch (const std::exception& e) {
        throw Error(ErrorCode::NoRoot, std::string("root search failed: ") + e.what());
    }
}

double round_sig12(double x) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double e = std::floor(std::log10(std::abs(x)));
    const double scale = std::pow(10.0, 11.0 - e);
    return std::round(x * scale) / scale;
}

}  // namespace

double continuation_gain(const StationaryValue& value, double z) {
    return g(z, value.params) - value.c - value.rho_bar(z);
}

bool is_trivial(const StationaryValue& value, double tol) {
    const double d = value.params.decision_threshold();
    return value.params.lambda0 <= value.c + value.rho_bar(d) + tol * value.params.lambda0;
}

bool is_strictly_trivial(const StationaryValue& value, double tol) {
    const double d = value.params.decision_threshold();
    return value.params.lambda0 < value.c + value.rho_bar(d) - tol * value.params.lambda0;
}

Thresholds solve_thresholds(const StationaryValue& value, double root_tol) {
    const DesignParams& p = value.params;
    const double d = p.decision_threshold();
    if (is_trivial(value)) {
        std::ostringstream os;
        os << "design is trivial: lambda0 - c - rho_bar(d) = " << continuation_gain(value, d);
        throw Error(ErrorCode::TrivialDesign, os.str());
    }
    const LogGrid& grid = value.rho_bar.grid();
    const long n = static_cast<long>(grid.size());
    auto gain = [&](double z) { return continuation_gain(value, z); };
    auto cont = [&](double z) { return gain(z) > 0.0; };

    Thresholds t;
    t.c = value.c;
    t.params = p;

    if (cont(grid.front())) {
        throw Error(ErrorCode::GridTooNarrow, "continuation region reaches the lower grid edge");
    }
    t.A = bisect_log(grid.front(), d, cont, root_tol);
    if (t.A < grid.node(1)) {
        throw Error(ErrorCode::GridTooNarrow, "lower threshold lies in the first grid cell");
    }
    t.residual_A = std::abs(gain(t.A));

    const double limit = p.lambda0 - value.c - value.rho_bar.upper_limit();
    if (limit > 1e-12 * p.lambda0) {
        t.B = kInf;
        t.upper_exists = false;
        t.residual_B = 0.0;
        t.warnings.push_back(
            "no upper threshold: lambda0 - rho_bar(z) stays above c as z grows, so the test "
            "never rejects at a finite likelihood ratio and is not K1-optimal");
    } else {
        if (cont(grid.back())) {
            throw Error(ErrorCode::GridTooNarrow, "continuation region reaches the upper grid edge");
        }
        t.B = bisect_log(grid.back(), d, cont, root_tol);
        if (t.B > grid.node(n - 2)) {
            throw Error(ErrorCode::GridTooNarrow, "upper threshold lies in the last grid cell");
        }
        t.residual_B = std::abs(gain(t.B));
    }

    const double inside = t.upper_exists ? std::sqrt(t.A * t.B) : d;
    bool ok = gain(t.A / 2.0) < 0.0 && gain(inside) > 0.0;
    if (t.upper_exists) ok = ok && gain(2.0 * t.B) < 0.0;
    t.sign_pattern_ok = ok;
    if (!(t.A <= 1.0 && 1.0 <= t.B)) {
        t.warnings.push_back("z = 1 lies outside [A, B]; the first group is always followed by a stop");
    }
    return t;
}

RhoCache::RhoCache(const StageKernel& kernel, FixedPointOptions options)
    : kernel_(kernel), options_(std::move(options)) {}

std::shared_ptr<const StationaryValue> RhoCache::get(double c, double lambda) {
    const auto key = std::make_pair(round_sig12(c), round_sig12(lambda));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = table_.find(key);
        if (it != table_.end()) return it->second;
    }
    FixedPointOptions opts;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        opts = options_;
    }
    auto v = std::make_shared<const StationaryValue>(
        stationary_value(kernel_, c, DesignParams{lambda, 1.0}, opts));
    std::lock_guard<std::mutex> lock(mutex_);
    // Later solves start from the widest span needed so far.
    const GridSpec& used = v->grid_spec;
    if (used.span_hi > options_.grid.span_hi || used.span_lo < options_.grid.span_lo) {
        options_.grid.span_lo = std::min(options_.grid.span_lo, used.span_lo);
        options_.grid.span_hi = std::max(options_.grid.span_hi, used.span_hi);
        const double step = std::log(used.span_hi / used.span_lo) / static_cast<double>(used.points - 1);
        options_.grid.points = static_cast<std::size_t>(
                                   std::ceil(std::log(options_.grid.span_hi / options_.grid.span_lo) / step)) + 1;
    }
    return table_.emplace(key, std::move(v)).first->second;
}

std::size_t RhoCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return table_.size();
}

InverseDesign design_from_thresholds(double A, double B, RhoCache& cache,
                                     const InverseDesignOptions& options) {
    if (!(A > 0.0) || !(B > A) || !std::isfinite(B)) {
        std::ostringstream os;
        os << "inverse design needs 0 < A < B < inf, got A=" << A << " B=" << B;
        throw Error(ErrorCode::BadThresholds, os.str());
    }
    auto excess_at_A = [&](double c, double lambda) {
        return c + cache.get(c, lambda)->rho_bar(A) - A;
    };

    // Consecutive outer steps barely move c, so the last root seeds a narrow bracket.
    double c_hint = 0.0;
    auto solve_c = [&](double lambda) {
        if (c_hint > 0.0) {
            const double lo = c_hint * (1.0 - 1e-3), hi = std::min(A, c_hint * (1.0 + 1e-3));
            const double f_lo = excess_at_A(lo, lambda);
            const double f_hi = excess_at_A(hi, lambda);
            if (f_lo < 0.0 && f_hi > 0.0) {
                c_hint = log_root([&](double x) { return excess_at_A(std::exp(x), lambda); }, lo, hi,
                                  options.root_tol, options.max_iter, f_lo, f_hi, options.root_tol * A)
                             .value;
                return c_hint;
            }
        }
        double hi = A;
        double lo = A * 1e-2;
        while (excess_at_A(lo, lambda) > 0.0) {
            lo *= 0.1;
            if (lo < 1e-9 * A) {
                std::ostringstream os;
                os << "no cost scale solves c + rho_bar(A) = A at lambda=" << lambda
                   << " (bracket [" << lo << ", " << hi << "])";
                throw Error(ErrorCode::NoRoot, os.str());
            }
        }
        c_hint = log_root([&](double x) { return excess_at_A(std::exp(x), lambda); }, lo, hi,
                          options.root_tol, options.max_iter, std::nullopt, std::nullopt,
                          options.root_tol * A)
                     .value;
        return c_hint;
    };

    auto G = [&](double lambda, double& c_out) {
        c_out = solve_c(lambda);
        return lambda - cache.get(c_out, lambda)->rho_bar(B) - c_out;
    };

    // G(lambda) equals -c(lambda) wherever B lies beyond the upper threshold of
    // (c(lambda), lambda), which makes it flat over most of a wide band. The
    // search therefore runs on log(B(lambda) / B), which has the same root and
    // no flat part, and G is reported at the result.
    constexpr double kFar = 1e3;
    auto H = [&](double lambda) {
        const double c = solve_c(lambda);
        const auto v = cache.get(c, lambda);
        try {
            const Thresholds t = solve_thresholds(*v, options.root_tol);
            return t.upper_exists ? std::log(t.B / B) : kFar;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::TrivialDesign) return -kFar;
            if (e.code() == ErrorCode::GridTooNarrow) return kFar;
            throw;
        }
    };

    // The root lies in (A, B). Walk up from A in factors of 4 to bracket it, so
    // that very wide bands never evaluate at multipliers far beyond the root.
    double lo = A, hi = A;
    double h_lo = H(lo);
    double h_hi = h_lo;
    if (!(h_lo <= 0.0)) {
        std::ostringstream os;
        os << "the upper threshold already exceeds B at lambda = A";
        throw Error(ErrorCode::NoRoot, os.str());
    }
    while (!(h_hi > 0.0)) {
        if (hi >= B) {
            throw Error(ErrorCode::NoRoot, "the upper threshold stays below B for every lambda in [A, B]");
        }
        lo = hi;
        h_lo = h_hi;
        hi = std::min(4.0 * hi, B);
        h_hi = H(hi);
    }

    InverseDesign out;
    out.A = A;
    out.B = B;
    const LogRoot root = log_root([&](double x) { return H(std::exp(x)); }, lo, hi, options.outer_tol,
                                  options.max_iter, h_lo, h_hi, options.root_tol);
    out.lambda = root.value;
    out.lambda_lo = root.lo;
    out.lambda_hi = root.hi;
    out.outer_iterations = root.iterations;
    out.residual_G = G(out.lambda, out.c);
    out.residual_A = excess_at_A(out.c, out.lambda);
    return out;
}

InverseDesign design_from_thresholds(double A, double B, const StageKernel& kernel,
                                     const InverseDesignOptions& options) {
    RhoCache cache(kernel, options.fixed_point);
    return design_from_thresholds(A, B, cache, options);
}

double r_function(double z, double c, double lambda, const StageKernel& kernel,
                  const FixedPointOptions& options) {
    if (c < 0.0 || lambda < 0.0 || z < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "R(z; c, lambda) needs nonnegative arguments");
    }
    if (c == 0.0 || lambda == 0.0 || z == 0.0) return c;
    const StationaryValue v = stationary_value(kernel, c, DesignParams{lambda, 1.0}, options);
    return c + v.rho_bar(z);
}

}  // namespace rgseq
