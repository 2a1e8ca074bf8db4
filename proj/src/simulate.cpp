#include "rgseq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "rgseq/errors.hpp"
#include "rgseq/rng.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Replication {
    bool reject = false;
    bool censored = false;
    int tau = 0;
    double cost = 0.0;
};

// Index of the category hit by u under cumulative weights `cdf`.
std::size_t pick(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> cumulative(const std::vector<double>& p) {
    std::vector<double> c(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = s += p[i];
    for (auto& x : c) x /= s;
    return c;
}

Estimate mean_and_se(const std::vector<double>& x) {
    Estimate e;
    const double n = static_cast<double>(x.size());
    double sum = 0.0;
    for (double v : x) sum += v;
    e.value = sum / n;
    if (x.size() >= 2) {
        double ss = 0.0;
        for (double v : x) ss += (v - e.value) * (v - e.value);
        e.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

}  // namespace

Estimate SimulationReport::error_probability() const {
    return hypothesis == Hypothesis::H0 ? reject : accept;
}

SimulationReport simulate(const TestRule& rule, const ObservationModel& model,
                          const GroupSizeModel& groups, const CostModel& cost,
                          Hypothesis hypothesis, const SimulationOptions& options) {
    if (options.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be at least 1");
    if (options.cap < 1) throw Error(ErrorCode::InvalidArgument, "cap must be at least 1");

    const auto& f = hypothesis == Hypothesis::H0 ? model.f0() : model.f1();
    const std::vector<double> obs_cdf = cumulative(f);
    std::vector<double> log_lr(model.alphabet_size());
    for (std::size_t x = 0; x < log_lr.size(); ++x) {
        const double a = model.f0()[x], b = model.f1()[x];
        log_lr[x] = a == 0.0 ? (b == 0.0 ? 0.0 : kInf) : (b == 0.0 ? -kInf : std::log(b / a));
    }
    const int prefix = static_cast<int>(groups.prefix.size());
    std::vector<std::vector<double>> group_cdf;
    for (int k = 1; k <= prefix + 1; ++k) group_cdf.push_back(cumulative(groups.pmf_at(k)));
    std::vector<double> group_cost(groups.support.size());
    for (std::size_t i = 0; i < group_cost.size(); ++i) group_cost[i] = cost(groups.support[i]);

    const Philox4x32 gen(options.seed);
    std::vector<Replication> results(options.reps);

    auto run = [&](std::uint64_t r) {
        ReplicationStream stream(gen, r);
        Replication out;
        double log_z = 0.0;
        for (int k = 1; k <= options.cap; ++k) {
            const auto& cdf = group_cdf[std::min(k, prefix + 1) - 1];
            const std::size_t g = pick(cdf, stream.uniform());
            out.cost += group_cost[g];
            for (int j = 0; j < groups.support[g]; ++j) {
                const double step = log_lr[pick(obs_cdf, stream.uniform())];
                if (log_z == -kInf || step == -kInf) {
                    log_z = -kInf;
                } else if (log_z == kInf || step == kInf) {
                    log_z = kInf;
                } else {
                    log_z += step;
                }
            }
            out.tau = k;
            const Verdict v = evaluate_rule_at_log(rule, k, log_z);
            bool stop = v.stops_surely();
            if (!stop && !v.continues_surely()) stop = stream.uniform() < v.stop_probability;
            if (stop) {
                out.reject = v.reject;
                return out;
            }
        }
        out.censored = true;
        return out;
    };

    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, 64));
    if (options.reps < 1000) threads = 1;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::uint64_t r = t; r < options.reps; r += threads) results[r] = run(r);
        });
    }
    for (auto& th : pool) th.join();

    // Fixed-order reduction keeps the report independent of scheduling.
    SimulationReport rep;
    rep.hypothesis = hypothesis;
    rep.reps = options.reps;
    rep.seed = options.seed;
    std::vector<double> rej(options.reps), acc(options.reps), k(options.reps), tau(options.reps);
    for (std::uint64_t r = 0; r < options.reps; ++r) {
        rej[r] = results[r].reject && !results[r].censored ? 1.0 : 0.0;
        acc[r] = !results[r].reject && !results[r].censored ? 1.0 : 0.0;
        k[r] = results[r].cost;
        tau[r] = static_cast<double>(results[r].tau);
        if (results[r].censored) ++rep.cap_hits;
    }
    rep.reject = mean_and_se(rej);
    rep.accept = mean_and_se(acc);
    rep.K = mean_and_se(k);
    rep.E_tau = mean_and_se(tau);
    rep.K_lower_bound = rep.cap_hits > 0;
    return rep;
}

}  // namespace rgseq
