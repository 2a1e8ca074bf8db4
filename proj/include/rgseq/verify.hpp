#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgseq/grid.hpp"
#include "rgseq/io.hpp"

namespace rgseq {

struct CheckResult {
    enum class Status { Pass, Fail, Skip };
    std::string name;
    Status status = Status::Pass;
    /// Worst observed deviation for the check (units depend on the check).
    double margin = 0.0;
    std::string detail;

    bool ok() const { return status != Status::Fail; }
};

struct VerifyOptions {
    /// The stationary cost scale is the tail kernel's mean cost.
    DesignParams params{5.0, 5.0};
    GridSpec grid;
    int max_horizon = 20;           // truncation monotonicity range
    int ladder_horizon = 50;        // stationary ladder identity
    int brute_force_horizon = 3;    // exhaustive enumeration range
    std::uint64_t mc_reps = 100000;
    std::uint64_t seed = 12345;
    int mc_cap = 500;
    bool run_mc = true;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool all_passed() const;
    json to_json() const;
};

/// Largest increase of consecutive slopes between grid nodes (0 for concave values).
double concavity_violation(const ValueFunction& v);
/// Largest decrease between consecutive grid nodes (0 for nondecreasing values).
double monotonicity_violation(const ValueFunction& v);

/// |estimate - exact| <= k standard errors; with a zero standard error the
/// estimate must equal the exact value up to rounding.
bool within_standard_errors(const Estimate& estimate, double exact, double k = 4.0);

/// Simulates the rule under both hypotheses and compares alpha, beta, K0, K1
/// and E[tau] with exact_oc at the same cap. Failing comparisons are rerun once
/// with four times the replications.
std::vector<CheckResult> mc_consistency(const TestRule& rule, const ModelSpec& spec,
                                        std::uint64_t reps, std::uint64_t seed, int cap,
                                        const std::string& label);

/// Runs every invariant of the value functions, thresholds, rules and
/// evaluators on one model and design.
VerifyReport run_invariant_suite(const ModelSpec& spec, const VerifyOptions& options);

}  // namespace rgseq
