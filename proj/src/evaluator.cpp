#include "rgseq/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct State {
    double log_z;
    double m0, m1;        // path masses under H0 and H1
    double cost0, cost1;  // mass-weighted accumulated sampling cost
};

double add_log(double a, double b) {
    if (a == -kInf || b == -kInf) return -kInf;
    if (a == kInf || b == kInf) return kInf;
    return a + b;
}

void merge_states(std::vector<State>& s, double tol) {
    std::sort(s.begin(), s.end(), [](const State& x, const State& y) { return x.log_z < y.log_z; });
    std::vector<State> out;
    out.reserve(s.size());
    for (const auto& x : s) {
        if (!out.empty()) {
            State& y = out.back();
            const bool same = (std::isinf(x.log_z) || std::isinf(y.log_z))
                                  ? x.log_z == y.log_z
                                  : x.log_z - y.log_z <= tol;
            if (same) {
                y.m0 += x.m0;
                y.m1 += x.m1;
                y.cost0 += x.cost0;
                y.cost1 += x.cost1;
                continue;
            }
        }
        out.push_back(x);
    }
    s.swap(out);
}

}  // namespace

OperatingCharacteristics exact_oc(const TestRule& rule, const KernelSequence& kernels,
                                  const ExactOcOptions& options) {
    if (options.cap < 1) throw Error(ErrorCode::InvalidArgument, "cap must be at least 1");
    OperatingCharacteristics oc;
    std::vector<State> cont{{0.0, 1.0, 1.0, 0.0, 0.0}};
    double stopped0 = 0.0, stopped1 = 0.0;
    double path_cost0 = 0.0, path_cost1 = 0.0;
    double stage_cost0 = 0.0, stage_cost1 = 0.0;
    double run0 = 1.0, run1 = 1.0;  // continuing mass

    int k = 1;
    for (; k <= options.cap; ++k) {
        oc.tail0.push_back(run0);
        oc.tail1.push_back(run1);
        const StageKernel& kernel = kernels.at(k);
        stage_cost0 += kernel.mean_cost * run0;
        stage_cost1 += kernel.mean_cost * run1;

        std::vector<State> next;
        next.reserve(cont.size() * kernel.group_lr.size() + 1);
        for (const auto& s : cont) {
            for (const auto& comp : kernel.components) {
                for (const auto& a : comp.lr.atoms()) {
                    const double w0 = comp.prob * a.p0;
                    const double w1 = comp.prob * a.p1;
                    const double m0 = s.m0 * w0;
                    const double m1 = s.m1 * w1;
                    if (m0 == 0.0 && m1 == 0.0) continue;
                    next.push_back({add_log(s.log_z, a.log_lr), m0, m1,
                                    s.cost0 * w0 + comp.cost * m0,
                                    s.cost1 * w1 + comp.cost * m1});
                }
            }
        }
        merge_states(next, options.merge_tol);
        oc.max_states = std::max(oc.max_states, next.size());
        if (next.size() > options.state_cap) {
            std::ostringstream os;
            os << "exact evaluation needs " << next.size() << " states at stage " << k
               << " (cap " << options.state_cap << ")";
            throw Error(ErrorCode::StateSpaceTooLarge, os.str());
        }

        cont.clear();
        run0 = run1 = 0.0;
        for (const auto& s : next) {
            const Verdict v = evaluate_rule_at_log(rule, k, s.log_z);
            const double p = v.stop_probability;
            if (p > 0.0) {
                const double s0 = s.m0 * p, s1 = s.m1 * p;
                stopped0 += s0;
                stopped1 += s1;
                path_cost0 += s.cost0 * p;
                path_cost1 += s.cost1 * p;
                if (v.reject) {
                    oc.alpha += s0;
                } else {
                    oc.beta += s1;
                }
            }
            if (p < 1.0) {
                const double q = 1.0 - p;
                State c{s.log_z, s.m0 * q, s.m1 * q, s.cost0 * q, s.cost1 * q};
                if (c.m0 > 0.0 || c.m1 > 0.0) {
                    run0 += c.m0;
                    run1 += c.m1;
                    cont.push_back(c);
                }
            }
        }
        oc.conservation_error = std::max(
            {oc.conservation_error, std::abs(run0 + stopped0 - 1.0), std::abs(run1 + stopped1 - 1.0)});
        if (run0 < options.mass_tol && run1 < options.mass_tol) {
            oc.terminated = true;
            break;
        }
    }
    oc.stages = std::min(k, options.cap);
    oc.tail0.push_back(run0);
    oc.tail1.push_back(run1);
    oc.truncation_mass0 = run0;
    oc.truncation_mass1 = run1;
    oc.K0_lower_bound = run0 >= options.mass_tol;
    oc.K1_lower_bound = run1 >= options.mass_tol;

    for (const auto& s : cont) {
        path_cost0 += s.cost0;
        path_cost1 += s.cost1;
    }
    oc.K0 = stage_cost0;
    oc.K1 = stage_cost1;
    oc.cost_crosscheck_error =
        std::max(std::abs(stage_cost0 - path_cost0), std::abs(stage_cost1 - path_cost1));
    // E[min(tau, cap)]: the last tail entry is the mass beyond the cap.
    for (std::size_t i = 0; i + 1 < oc.tail0.size(); ++i) {
        oc.E_tau_0 += oc.tail0[i];
        oc.E_tau_1 += oc.tail1[i];
    }
    return oc;
}

double lagrangian(const OperatingCharacteristics& oc, const DesignParams& params) {
    return oc.K0 + params.lambda0 * oc.alpha + params.lambda1 * oc.beta;
}

TailFit tail_decay_check(const std::vector<double>& tail, double hellinger_rate, double A) {
    TailFit fit;
    fit.hellinger_rate = hellinger_rate;
    std::vector<double> ks, ys;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        if (tail[i] > 0.0 && tail[i] > 1e-300) {
            ks.push_back(static_cast<double>(i + 1));
            ys.push_back(std::log(tail[i]));
        }
    }
    fit.points = static_cast<int>(ks.size());
    if (ks.size() < 3) {
        fit.degenerate = true;
        fit.diagnosis = "degenerate tail: fewer than three positive values";
        return fit;
    }
    const double n = static_cast<double>(ks.size());
    double mk = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) mk += ks[i], my += ys[i];
    mk /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mk) * (ys[i] - my);
        sxx += (ks[i] - mk) * (ks[i] - mk);
    }
    fit.slope = sxy / sxx;
    fit.r_hat = std::exp(fit.slope);
    double log_a = -kInf;
    for (std::size_t i = 0; i < ks.size(); ++i) log_a = std::max(log_a, ys[i] - fit.slope * ks[i]);
    fit.a = std::exp(log_a);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ys[i] > log_a + fit.slope * ks[i] + 1e-12) fit.envelope_ok = false;
    }
    fit.geometric = fit.r_hat < 1.0;
    if (!fit.geometric) {
        std::ostringstream os;
        os << "NonGeometricTail: fitted rate " << fit.r_hat << " >= 1";
        fit.diagnosis = os.str();
    }
    if (A > 0.0 && hellinger_rate > 0.0) {
        for (std::size_t i = 1; i < tail.size(); ++i) {
            const double k = static_cast<double>(i + 1);
            const double bound = std::pow(hellinger_rate, k - 1.0) / std::sqrt(A);
            if (tail[i] > bound * (1.0 + 1e-9) + 1e-300) fit.hellinger_bound_ok = false;
        }
    }
    return fit;
}

}  // namespace rgseq
