#include "rgseq/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxPaths = 5'000'000;

double add_log(double a, double b) {
    if (a == -kInf || b == -kInf) return -kInf;
    if (a == kInf || b == kInf) return kInf;
    return a + b;
}

bool same_log(double a, double b, double tol) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= tol;
}

}  // namespace

TruncatedRuleSpace::TruncatedRuleSpace(const KernelSequence& kernels, int horizon,
                                       const BruteForceOptions& options)
    : horizon_(horizon), state_tol_(options.state_tol) {
    if (horizon < 1) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");

    struct Frame {
        double log_z, p0, p1, cost;
    };
    std::vector<Step> prefix(horizon);
    auto note_terminal = [&](double lz) {
        for (double t : terminal_log_z_) {
            if (same_log(t, lz, state_tol_)) return;
        }
        terminal_log_z_.push_back(lz);
    };
    auto state_index = [&](int stage, double lz) {
        int idx = find_state(stage, lz);
        if (idx >= 0) return idx;
        states_.push_back({stage, lz});
        if (states_.size() > options.max_states) {
            throw Error(ErrorCode::StateSpaceTooLarge, "reachable state space exceeds the cap");
        }
        return static_cast<int>(states_.size()) - 1;
    };

    // Depth-first enumeration of every branch sequence.
    auto recurse = [&](auto&& self, int k, Frame f) -> void {
        const StageKernel& kernel = kernels.at(k);
        for (const auto& comp : kernel.components) {
            for (const auto& a : comp.lr.atoms()) {
                const double p0 = f.p0 * comp.prob * a.p0;
                const double p1 = f.p1 * comp.prob * a.p1;
                if (p0 == 0.0 && p1 == 0.0) continue;
                const Frame next{add_log(f.log_z, a.log_lr), p0, p1, f.cost + comp.cost};
                note_terminal(next.log_z);
                const int idx = k < horizon_ ? state_index(k, next.log_z) : -1;
                prefix[k - 1] = Step{idx, next.log_z, p0, p1, next.cost};
                if (k < horizon_) {
                    self(self, k + 1, next);
                } else {
                    if (path_count_ >= kMaxPaths) {
                        throw Error(ErrorCode::StateSpaceTooLarge, "too many sample paths to enumerate");
                    }
                    paths_.insert(paths_.end(), prefix.begin(), prefix.end());
                    ++path_count_;
                }
            }
        }
    };
    recurse(recurse, 1, Frame{0.0, 1.0, 1.0, 0.0});
    std::sort(terminal_log_z_.begin(), terminal_log_z_.end());

    if (static_cast<int>(states_.size()) > options.max_bits || states_.size() >= 63) {
        std::ostringstream os;
        os << states_.size() << " decision states exceed the enumeration limit of "
           << options.max_bits << " bits";
        throw Error(ErrorCode::StateSpaceTooLarge, os.str());
    }
}

int TruncatedRuleSpace::find_state(int stage, double log_z) const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].stage == stage && same_log(states_[i].log_z, log_z, state_tol_)) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

TruncatedRuleSpace::Outcome TruncatedRuleSpace::evaluate(std::uint64_t mask, double log_threshold,
                                                         DecisionTie tie) const {
    Outcome out;
    const std::size_t N = static_cast<std::size_t>(horizon_);
    for (std::size_t p = 0; p < path_count_; ++p) {
        const Step* path = &paths_[p * N];
        const double p0 = path[N - 1].p0;
        const double p1 = path[N - 1].p1;
        for (std::size_t k = 0; k < N; ++k) {
            const Step& s = path[k];
            if (s.state >= 0) {
                out.reached |= std::uint64_t{1} << s.state;
                if (mask >> s.state & 1u) continue;
            }
            out.K0 += p0 * s.cost;
            out.K1 += p1 * s.cost;
            bool reject;
            if (same_log(s.log_z, log_threshold, state_tol_)) {
                reject = tie == DecisionTie::Reject;
            } else {
                reject = s.log_z > log_threshold;
            }
            if (reject) {
                out.alpha += p0;
            } else {
                out.beta += p1;
            }
            break;
        }
    }
    return out;
}

std::uint64_t TruncatedRuleSpace::canonical(std::uint64_t mask) const {
    return mask & evaluate(mask, 0.0, DecisionTie::Reject).reached;
}

std::uint64_t TruncatedRuleSpace::mask_of(const TestRule& rule) const {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const Verdict v = evaluate_rule_at_log(rule, states_[i].stage, states_[i].log_z);
        if (v.continues_surely()) mask |= std::uint64_t{1} << i;
    }
    return mask;
}

BruteForceResult brute_force_truncated_optimum(const TruncatedRuleSpace& space,
                                               const DesignParams& params,
                                               const BruteForceOptions& options) {
    validate(params);
    BruteForceResult r;
    r.horizon = space.horizon();
    r.params = params;
    r.states = space.states();
    const double log_d = std::log(params.decision_threshold());
    const std::uint64_t count = space.rule_count();
    std::vector<double> values(count);
    double best = kInf;
    for (std::uint64_t m = 0; m < count; ++m) {
        const auto o = space.evaluate(m, log_d, DecisionTie::Reject);
        values[m] = o.K0 + params.lambda0 * o.alpha + params.lambda1 * o.beta;
        best = std::min(best, values[m]);
    }
    r.rules_enumerated = count;
    r.min_lagrangian = best;
    std::set<std::uint64_t> minimizers;
    for (std::uint64_t m = 0; m < count; ++m) {
        if (values[m] <= best + options.optimum_tol) minimizers.insert(space.canonical(m));
    }
    r.minimizers.assign(minimizers.begin(), minimizers.end());
    return r;
}

BruteForceResult brute_force_truncated_optimum(const KernelSequence& kernels,
                                               const DesignParams& params, int horizon,
                                               const BruteForceOptions& options) {
    const TruncatedRuleSpace space(kernels, horizon, options);
    return brute_force_truncated_optimum(space, params, options);
}

}  // namespace rgseq
