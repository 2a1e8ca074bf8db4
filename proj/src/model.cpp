#include "rgseq/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPmfTol = 1e-12;

void check_pmf(std::span<const double> p, const char* what) {
    if (p.empty()) {
        throw Error(ErrorCode::NotAPmf, std::string(what) + " is empty");
    }
    double sum = 0.0;
    for (double x : p) {
        if (!std::isfinite(x) || x < 0.0) {
            std::ostringstream os;
            os << what << " has an invalid entry " << x;
            throw Error(ErrorCode::NotAPmf, os.str());
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kPmfTol) {
        std::ostringstream os;
        os.precision(17);
        os << what << " sums to " << sum;
        throw Error(ErrorCode::NotAPmf, os.str());
    }
}

// log of the number of compositions C(n + k - 1, k - 1), used to decide
// whether exact count enumeration is affordable.
double log_compositions(int n, std::size_t k) {
    if (k <= 1) return 0.0;
    const double kk = static_cast<double>(k);
    return std::lgamma(n + kk) - std::lgamma(n + 1.0) - std::lgamma(kk);
}

// Exact law of the n-observation log-LR by enumerating symbol counts. Atoms that
// share a count vector are identical by construction, so with merge_tol = 0 the
// lattice atoms still coincide.
std::vector<LrAtom> enumerate_counts(const ObservationModel& model, int n) {
    std::vector<std::size_t> active;
    for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
        if (model.f0()[x] > 0.0 || model.f1()[x] > 0.0) active.push_back(x);
    }
    const auto& f0 = model.f0();
    const auto& f1 = model.f1();

    std::vector<LrAtom> out;
    std::vector<int> counts(active.size(), 0);
    const double log_n_fact = std::lgamma(n + 1.0);

    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int remaining) {
        if (pos + 1 == active.size()) {
            counts[pos] = remaining;
            double log_mult = log_n_fact;
            double log_p0 = 0.0, log_p1 = 0.0, log_lr = 0.0;
            bool zero0 = false, zero1 = false;
            for (std::size_t i = 0; i < active.size(); ++i) {
                const int c = counts[i];
                if (c == 0) continue;
                const std::size_t x = active[i];
                log_mult -= std::lgamma(c + 1.0);
                if (f0[x] == 0.0) zero0 = true; else log_p0 += c * std::log(f0[x]);
                if (f1[x] == 0.0) zero1 = true; else log_p1 += c * std::log(f1[x]);
                if (f0[x] > 0.0 && f1[x] > 0.0) log_lr += c * (std::log(f1[x]) - std::log(f0[x]));
            }
            if (zero0 && zero1) return;
            LrAtom atom{};
            atom.p0 = zero0 ? 0.0 : std::exp(log_mult + log_p0);
            atom.p1 = zero1 ? 0.0 : std::exp(log_mult + log_p1);
            atom.log_lr = zero0 ? kInf : (zero1 ? -kInf : log_lr);
            out.push_back(atom);
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[pos] = c;
            rec(pos + 1, remaining - c);
        }
    };
    rec(0, n);
    return out;
}

double combine_log(double a, double b) {
    // -inf + +inf never occurs: such a pair has zero mass under both hypotheses.
    return a + b;
}

}  // namespace

// ---------------------------------------------------------------- ObservationModel

ObservationModel::ObservationModel(std::vector<double> f0, std::vector<double> f1)
    : f0_(std::move(f0)), f1_(std::move(f1)) {}

double ObservationModel::hellinger_affinity() const {
    double h = 0.0;
    for (std::size_t x = 0; x < f0_.size(); ++x) h += std::sqrt(f0_[x] * f1_[x]);
    return h;
}

ObservationModel make_model(std::vector<double> f0, std::vector<double> f1) {
    if (f0.size() != f1.size()) {
        throw Error(ErrorCode::NotAPmf, "f0 and f1 have different lengths");
    }
    if (f0.size() < 2) {
        throw Error(ErrorCode::NotAPmf, "alphabet must have at least two symbols");
    }
    check_pmf(f0, "f0");
    check_pmf(f1, "f1");
    bool distinct = false;
    for (std::size_t x = 0; x < f0.size(); ++x) {
        if (std::abs(f0[x] - f1[x]) > 1e-14) distinct = true;
    }
    if (!distinct) {
        throw Error(ErrorCode::IndistinguishableHypotheses, "f0 and f1 coincide on every symbol");
    }
    return ObservationModel(std::move(f0), std::move(f1));
}

// ---------------------------------------------------------------- LrDistribution

LrDistribution::LrDistribution(std::vector<LrAtom> atoms) : atoms_(std::move(atoms)) {}

bool LrDistribution::has_infinite_atom() const {
    return !atoms_.empty() && atoms_.back().log_lr == kInf;
}

double LrDistribution::p0_positive() const {
    double s = 0.0;
    for (const auto& a : atoms_) {
        if (a.log_lr != -kInf) s += a.p0;
    }
    return s;
}

double LrDistribution::p1_finite() const {
    double s = 0.0;
    for (const auto& a : atoms_) {
        if (a.log_lr != kInf) s += a.p1;
    }
    return s;
}

std::vector<LrAtom> merge_atoms(std::vector<LrAtom> atoms, double merge_tol) {
    std::sort(atoms.begin(), atoms.end(),
              [](const LrAtom& x, const LrAtom& y) { return x.log_lr < y.log_lr; });
    std::vector<LrAtom> out;
    out.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (a.p0 == 0.0 && a.p1 == 0.0) continue;
        if (!out.empty()) {
            LrAtom& last = out.back();
            const bool same_inf = std::isinf(a.log_lr) && a.log_lr == last.log_lr;
            const bool close = std::isfinite(a.log_lr) && std::isfinite(last.log_lr) &&
                               a.log_lr - last.log_lr <= merge_tol;
            if (same_inf || close) {
                last.p0 += a.p0;
                last.p1 += a.p1;
                continue;
            }
        }
        out.push_back(a);
    }
    return out;
}

LrDistribution single_obs_lr(const ObservationModel& model, double merge_tol) {
    return group_lr(model, 1, merge_tol);
}

LrDistribution group_lr(const ObservationModel& model, int n, double merge_tol,
                        std::size_t atom_cap) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "group size must be nonnegative");
    if (n == 0) return LrDistribution({LrAtom{0.0, 1.0, 1.0}});

    std::size_t active = 0;
    for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
        if (model.f0()[x] > 0.0 || model.f1()[x] > 0.0) ++active;
    }
    if (log_compositions(n, active) <= std::log(static_cast<double>(atom_cap))) {
        return LrDistribution(merge_atoms(enumerate_counts(model, n), merge_tol));
    }

    // Too many count vectors: convolve one observation at a time and rely on
    // merging to keep the support bounded.
    const auto single = enumerate_counts(model, 1);
    std::vector<LrAtom> cur{LrAtom{0.0, 1.0, 1.0}};
    for (int step = 0; step < n; ++step) {
        std::vector<LrAtom> next;
        next.reserve(cur.size() * single.size());
        for (const auto& a : cur) {
            for (const auto& s : single) {
                const double p0 = a.p0 * s.p0;
                const double p1 = a.p1 * s.p1;
                if (p0 == 0.0 && p1 == 0.0) continue;
                next.push_back(LrAtom{combine_log(a.log_lr, s.log_lr), p0, p1});
            }
        }
        cur = merge_atoms(std::move(next), merge_tol);
        if (cur.size() > atom_cap) {
            std::ostringstream os;
            os << "group of size " << n << " needs more than " << atom_cap
               << " atoms; raise merge_tol (currently " << merge_tol << ")";
            throw Error(ErrorCode::AtomExplosion, os.str());
        }
    }
    return LrDistribution(std::move(cur));
}

std::optional<double> lattice_step(const LrDistribution& lr, double min_step) {
    std::vector<double> v;
    for (const auto& a : lr.atoms()) {
        if (std::isfinite(a.log_lr) && std::abs(a.log_lr) > 1e-12) v.push_back(std::abs(a.log_lr));
    }
    if (v.empty()) return std::nullopt;

    auto approx_gcd = [](double a, double b) {
        const double eps = 1e-9 * std::max(a, b);
        while (true) {
            if (a < b) std::swap(a, b);
            if (b <= eps) return a;
            double r = std::fmod(a, b);
            if (b - r <= eps) r = 0.0;
            a = b;
            b = r;
        }
    };
    double step = v.front();
    for (double x : v) step = approx_gcd(step, x);
    if (step < min_step) return std::nullopt;
    for (double x : v) {
        const double q = x / step;
        if (std::abs(q - std::round(q)) > 1e-7) return std::nullopt;
    }
    return step;
}

// ---------------------------------------------------------------- groups and costs

const std::vector<double>& GroupSizeModel::pmf_at(int stage) const {
    if (stage >= 1 && static_cast<std::size_t>(stage) <= prefix.size()) return prefix[stage - 1];
    return pmf;
}

GroupSizeModel make_group_model(std::vector<int> support, std::vector<double> pmf,
                                std::vector<std::vector<double>> prefix) {
    if (support.empty() || support.size() != pmf.size()) {
        throw Error(ErrorCode::NotAPmf, "group support and pmf must be nonempty and of equal length");
    }
    for (int n : support) {
        if (n < 0) throw Error(ErrorCode::NotAPmf, "group sizes must be nonnegative");
    }
    auto sorted = support;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorCode::NotAPmf, "group support values must be distinct");
    }
    check_pmf(pmf, "group_pmf");
    for (const auto& p : prefix) {
        if (p.size() != support.size()) {
            throw Error(ErrorCode::NotAPmf, "stage_prefix pmf length differs from group_support");
        }
        check_pmf(p, "stage_prefix pmf");
    }
    return GroupSizeModel{std::move(support), std::move(pmf), std::move(prefix)};
}

double CostModel::operator()(int m) const {
    switch (kind) {
        case Kind::Constant: return a;
        case Kind::Linear: return a + b * m;
        case Kind::Table: {
            for (std::size_t i = 0; i < table_support.size(); ++i) {
                if (table_support[i] == m) return table_values[i];
            }
            throw Error(ErrorCode::ConfigError,
                        "cost table has no entry for group size " + std::to_string(m));
        }
    }
    return 0.0;
}

CostModel CostModel::constant(double a) {
    CostModel c;
    c.kind = Kind::Constant;
    c.a = a;
    c.b = 0.0;
    return c;
}

CostModel CostModel::linear(double a, double b) {
    CostModel c;
    c.kind = Kind::Linear;
    c.a = a;
    c.b = b;
    return c;
}

CostModel CostModel::table(std::vector<int> support, std::vector<double> values) {
    if (support.size() != values.size()) {
        throw Error(ErrorCode::ConfigError, "cost table length differs from its support");
    }
    CostModel c;
    c.kind = Kind::Table;
    c.table_support = std::move(support);
    c.table_values = std::move(values);
    return c;
}

// ---------------------------------------------------------------- kernels

StageKernel make_stage_kernel(const ObservationModel& model, std::span<const int> support,
                              std::span<const double> pmf, const CostModel& cost,
                              double merge_tol, std::size_t atom_cap) {
    if (support.size() != pmf.size()) {
        throw Error(ErrorCode::NotAPmf, "group support and pmf differ in length");
    }
    check_pmf(pmf, "group pmf");
    StageKernel k;
    const double h = model.hellinger_affinity();
    std::vector<LrAtom> mixture;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (pmf[i] <= 0.0) continue;
        const int n = support[i];
        const double cn = cost(n);
        if (!(cn > 0.0) || !std::isfinite(cn)) {
            std::ostringstream os;
            os << "cost of a group of size " << n << " is " << cn << ", must be positive";
            throw Error(ErrorCode::ZeroCost, os.str());
        }
        auto lr = group_lr(model, n, merge_tol, atom_cap);
        for (const auto& a : lr.atoms()) {
            mixture.push_back(LrAtom{a.log_lr, pmf[i] * a.p0, pmf[i] * a.p1});
        }
        k.mean_cost += pmf[i] * cn;
        k.hellinger_rate += pmf[i] * std::pow(h, n);
        k.components.push_back(StageKernel::Component{n, pmf[i], cn, std::move(lr)});
    }
    k.group_lr = LrDistribution(merge_atoms(std::move(mixture), merge_tol));
    if (k.group_lr.size() > atom_cap) {
        throw Error(ErrorCode::AtomExplosion, "stage kernel mixture exceeds the atom cap");
    }
    return k;
}

KernelSequence::KernelSequence(std::vector<StageKernel> prefix, StageKernel tail)
    : prefix_(std::move(prefix)), tail_(std::move(tail)) {}

const StageKernel& KernelSequence::at(int stage) const {
    if (stage >= 1 && static_cast<std::size_t>(stage) <= prefix_.size()) return prefix_[stage - 1];
    return tail_;
}

KernelSequence make_kernels(const ObservationModel& model, const GroupSizeModel& groups,
                            const CostModel& cost, double merge_tol, std::size_t atom_cap) {
    std::vector<StageKernel> prefix;
    for (const auto& p : groups.prefix) {
        prefix.push_back(make_stage_kernel(model, groups.support, p, cost, merge_tol, atom_cap));
    }
    auto tail = make_stage_kernel(model, groups.support, groups.pmf, cost, merge_tol, atom_cap);
    return KernelSequence(std::move(prefix), std::move(tail));
}

}  // namespace rgseq
