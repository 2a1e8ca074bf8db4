#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rgseq {

/// Hypothesis pair on a finite alphabet. f0 is the law under H0, f1 under H1.
class ObservationModel {
public:
    ObservationModel(std::vector<double> f0, std::vector<double> f1);

    std::size_t alphabet_size() const { return f0_.size(); }
    const std::vector<double>& f0() const { return f0_; }
    const std::vector<double>& f1() const { return f1_; }

    /// Bhattacharyya coefficient sum_x sqrt(f0(x) f1(x)) = E0 Z^{1/2}.
    double hellinger_affinity() const;

    /// Model with the roles of the hypotheses exchanged.
    ObservationModel swapped() const { return ObservationModel(f1_, f0_); }

private:
    std::vector<double> f0_;
    std::vector<double> f1_;
};

/// Validates both pmfs and the distinctness of the hypotheses.
ObservationModel make_model(std::vector<double> f0, std::vector<double> f1);

/// One point of a likelihood-ratio law: log z with its mass under each hypothesis.
/// log_lr is +inf for outcomes impossible under H0 and -inf for outcomes
/// impossible under H1.
struct LrAtom {
    double log_lr;
    double p0;
    double p1;
};

/// Law of a likelihood ratio with finitely many atoms, sorted by log_lr.
class LrDistribution {
public:
    LrDistribution() = default;
    explicit LrDistribution(std::vector<LrAtom> atoms);

    const std::vector<LrAtom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool has_infinite_atom() const;

    /// P0(z > 0): H0 mass of atoms with log_lr > -inf.
    double p0_positive() const;
    /// P1(z < inf): H1 mass of atoms with finite or -inf log_lr, which equals E0 z.
    double p1_finite() const;

private:
    std::vector<LrAtom> atoms_;
};

/// Sort by log_lr and merge neighbours closer than merge_tol (probabilities add).
/// Infinite atoms merge only with atoms of the same sign of infinity.
std::vector<LrAtom> merge_atoms(std::vector<LrAtom> atoms, double merge_tol);

LrDistribution single_obs_lr(const ObservationModel& model, double merge_tol = 1e-12);

inline constexpr std::size_t kDefaultAtomCap = 1'000'000;

/// Law of the likelihood ratio of n i.i.d. observations. n = 0 gives the point mass at z = 1.
LrDistribution group_lr(const ObservationModel& model, int n, double merge_tol = 1e-12,
                        std::size_t atom_cap = kDefaultAtomCap);

/// Largest step delta such that every finite single-observation log-LR is an
/// integer multiple of delta, or nullopt when the atoms do not sit on a lattice.
std::optional<double> lattice_step(const LrDistribution& lr, double min_step);

struct GroupSizeModel {
    std::vector<int> support;
    std::vector<double> pmf;
    /// Per-stage pmfs (over `support`) for stages 1..prefix.size(); `pmf` applies afterwards.
    std::vector<std::vector<double>> prefix;

    bool stationary() const { return prefix.empty(); }
    const std::vector<double>& pmf_at(int stage) const;
};

GroupSizeModel make_group_model(std::vector<int> support, std::vector<double> pmf,
                                std::vector<std::vector<double>> prefix = {});

struct CostModel {
    enum class Kind { Constant, Linear, Table };
    Kind kind = Kind::Linear;
    double a = 0.0;
    double b = 1.0;
    /// For Kind::Table: cost of each element of the group support, in support order.
    std::vector<int> table_support;
    std::vector<double> table_values;

    double operator()(int m) const;

    static CostModel constant(double a);
    static CostModel linear(double a, double b);
    static CostModel table(std::vector<int> support, std::vector<double> values);
};

/// Everything the value recursion and the evaluators need about one stage.
struct StageKernel {
    struct Component {
        int n;
        double prob;
        double cost;
        LrDistribution lr;
    };

    std::vector<Component> components;  // only group sizes with p(n) > 0
    LrDistribution group_lr;            // mixture over n, weighted by p(n)
    double mean_cost = 0.0;
    double hellinger_rate = 0.0;        // sum_n p(n) h^n
};

StageKernel make_stage_kernel(const ObservationModel& model, std::span<const int> support,
                              std::span<const double> pmf, const CostModel& cost,
                              double merge_tol = 1e-12, std::size_t atom_cap = kDefaultAtomCap);

/// Stage kernels k = 1, 2, ...: an optional finite prefix followed by a stationary tail.
class KernelSequence {
public:
    KernelSequence(std::vector<StageKernel> prefix, StageKernel tail);
    explicit KernelSequence(StageKernel stationary) : KernelSequence({}, std::move(stationary)) {}

    /// Kernel for stage k (1-based).
    const StageKernel& at(int stage) const;
    const StageKernel& tail() const { return tail_; }
    std::size_t prefix_length() const { return prefix_.size(); }
    bool stationary() const { return prefix_.empty(); }

private:
    std::vector<StageKernel> prefix_;
    StageKernel tail_;
};

KernelSequence make_kernels(const ObservationModel& model, const GroupSizeModel& groups,
                            const CostModel& cost, double merge_tol = 1e-12,
                            std::size_t atom_cap = kDefaultAtomCap);

}  // namespace rgseq
