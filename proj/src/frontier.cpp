#include "rgseq/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgseq/errors.hpp"
#include "rgseq/threshold_solver.hpp"
#include "rgseq/value_iteration.hpp"

namespace rgseq {

FrontierProbe probe_design(const KernelSequence& kernels, double c, const DesignParams& params,
                           const GridSpec& grid, const ExactOcOptions& oc) {
    FixedPointOptions fo;
    fo.grid = grid;
    const StationaryValue value = stationary_value(kernels.tail(), c, params, fo);
    FrontierProbe p;
    p.params = params;
    p.trivial = is_strictly_trivial(value);
    p.rule = p.trivial ? trivial_rule(params) : dp_rule_stationary(value);
    p.oc = exact_oc(p.rule, kernels, oc);
    return p;
}

namespace {

class Search {
public:
    Search(const KernelSequence& kernels, const FrontierOptions& options, double c)
        : kernels_(kernels), options_(options), c_(c) {}

    // Probe, or nullopt when the design fails to solve or evaluate.
    std::optional<FrontierProbe> probe(double lambda0, double lambda1) {
        if (result.probes >= options_.max_probes) throw Exhausted{};
        ++result.probes;
        try {
            auto p = probe_design(kernels_, c_, DesignParams{lambda0, lambda1}, options_.grid, options_.oc);
            const double score =
                std::max(p.oc.alpha / options_.alpha_target, p.oc.beta / options_.beta_target);
            if (score < best_score_) {
                best_score_ = score;
                best_ = p;
            }
            return p;
        } catch (const Error&) {
            ++result.failed_probes;
            return std::nullopt;
        }
    }

    bool alpha_ok(const std::optional<FrontierProbe>& p) const {
        return p && p->oc.alpha <= options_.alpha_target;
    }
    bool feasible(const std::optional<FrontierProbe>& p) const {
        return p && p->meets(options_.alpha_target, options_.beta_target);
    }

    // Smallest lambda0 in [lo, hi] with alpha <= alpha*, at fixed lambda1.
    std::optional<FrontierProbe> inner(double lambda1, double lo, double hi) {
        // Large lambda0 can push the continuation region past any grid; step
        // the bracket down until the design solves.
        while (hi >= unsolved_lambda0_ && hi / options_.top_backoff >= lo) hi /= options_.top_backoff;
        auto top = probe(hi, lambda1);
        while (!top && hi / options_.top_backoff >= lo) {
            unsolved_lambda0_ = std::min(unsolved_lambda0_, hi);
            hi /= options_.top_backoff;
            top = probe(hi, lambda1);
        }
        if (!alpha_ok(top)) return top;
        auto bottom = probe(lo, lambda1);
        if (alpha_ok(bottom)) return bottom;
        double a = lo, b = hi;
        auto at_b = top;
        while (b / a > 1.0 + options_.rel_tol) {
            const double m = std::sqrt(a * b);
            auto pm = probe(m, lambda1);
            if (alpha_ok(pm)) {
                b = m;
                at_b = pm;
            } else {
                a = m;
            }
        }
        return at_b;
    }

    struct Exhausted {};

    FrontierResult result;
    std::optional<FrontierProbe> best_;

private:
    const KernelSequence& kernels_;
    const FrontierOptions& options_;
    double c_;
    double best_score_ = std::numeric_limits<double>::infinity();
    // Smallest lambda0 whose top probe failed; later brackets start below it.
    double unsolved_lambda0_ = std::numeric_limits<double>::infinity();
};

}  // namespace

FrontierResult search_frontier(const KernelSequence& kernels, const FrontierOptions& options) {
    const auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!in_unit(options.alpha_target) || !in_unit(options.beta_target)) {
        throw Error(ErrorCode::InvalidArgument, "error targets must lie in (0, 1)");
    }
    const double c = kernels.tail().mean_cost;
    double lo = options.lambda_lo_factor * c;
    double hi = options.lambda_hi_factor * c;
    if (options.lambda_max) {
        hi = std::min(hi, *options.lambda_max);
        lo = std::min(lo, hi);
    }
    if (!(lo > 0.0) || !(hi >= lo)) throw Error(ErrorCode::InvalidArgument, "empty multiplier bracket");

    Search s(kernels, options, c);
    s.result.c = c;
    auto finish = [&](const std::optional<FrontierProbe>& p) {
        if (s.feasible(p)) {
            s.result.met = true;
            s.result.design = *p;
        } else if (s.best_) {
            s.result.design = *s.best_;
            s.result.met = s.best_->meets(options.alpha_target, options.beta_target);
        } else {
            throw Error(ErrorCode::NoConvergence, "no multiplier probe could be solved");
        }
        return s.result;
    };

    try {
        auto first = s.probe(lo, lo);
        if (s.feasible(first)) return finish(first);

        auto top = s.inner(hi, lo, hi);
        if (!s.feasible(top)) return finish(std::nullopt);
        auto bottom = s.inner(lo, lo, hi);
        if (s.feasible(bottom)) return finish(bottom);

        double a = lo, b = hi;
        auto at_b = top;
        while (b / a > 1.0 + options.rel_tol) {
            const double m = std::sqrt(a * b);
            auto pm = s.inner(m, lo, hi);
            if (s.feasible(pm)) {
                b = m;
                at_b = pm;
            } else {
                a = m;
            }
        }
        return finish(at_b);
    } catch (const Search::Exhausted&) {
        return finish(std::nullopt);
    }
}

}  // namespace rgseq
