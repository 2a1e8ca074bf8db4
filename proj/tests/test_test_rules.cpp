#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rgseq/errors.hpp"
#include "rgseq/test_rules.hpp"
#include "support.hpp"

using namespace rgseq;
using rgseq::fixtures::bernoulli;
using rgseq::fixtures::single;
using rgseq::fixtures::uniform_pair;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 0 accept, 1 continue, 2 reject; -1 for a randomized boundary verdict.
int verdict_class(const Verdict& v) {
    if (v.continues_surely()) return 1;
    if (!v.stops_surely()) return -1;
    return v.reject ? 2 : 0;
}

}  // namespace

TEST(Rsprt, VerdictsAroundTheBand) {
    const auto r = rsprt(0.5, 2.0);
    EXPECT_TRUE(evaluate_rule_at(r, 1, 1.0).continues_surely());
    const auto at_b = evaluate_rule_at(r, 1, 2.0);
    EXPECT_TRUE(at_b.stops_surely());
    EXPECT_TRUE(at_b.reject);
    const auto at_a = evaluate_rule_at(r, 3, 0.5);
    EXPECT_TRUE(at_a.stops_surely());
    EXPECT_FALSE(at_a.reject);
    EXPECT_TRUE(evaluate_rule_at(r, 2, 5.0).reject);
    EXPECT_FALSE(evaluate_rule_at(r, 2, 0.1).reject);
    EXPECT_FALSE(evaluate_rule_at(r, 2, 0.0).reject);
    EXPECT_TRUE(evaluate_rule_at(r, 2, 0.0).stops_surely());
    const auto inf = evaluate_rule_at(r, 7, kInf);
    EXPECT_TRUE(inf.stops_surely());
    EXPECT_TRUE(inf.reject);
}

TEST(Rsprt, BoundaryRandomization) {
    const auto r = rsprt(0.5, 2.0, 0.5, 0.5);
    const auto a = evaluate_rule_at(r, 1, 0.5);
    EXPECT_EQ(a.stop_probability, 0.5);
    EXPECT_FALSE(a.reject);
    const auto b = evaluate_rule_at(r, 1, 2.0);
    EXPECT_EQ(b.stop_probability, 0.5);
    EXPECT_TRUE(b.reject);
    EXPECT_EQ(evaluate_rule_at(r, 1, 1.0).stop_probability, 0.0);
    EXPECT_EQ(evaluate_rule_at(r, 1, 3.0).stop_probability, 1.0);
}

TEST(Rsprt, OneSidedAcceptsOnly) {
    const auto r = rsprt(0.5, kInf);
    for (double z : {0.6, 2.0, 1e10, 1e300}) EXPECT_TRUE(evaluate_rule_at(r, 1, z).continues_surely());
    for (double z : {0.0, 0.1, 0.5}) {
        const auto v = evaluate_rule_at(r, 4, z);
        EXPECT_TRUE(v.stops_surely());
        EXPECT_FALSE(v.reject);
    }
}

TEST(Rsprt, BadThresholds) {
    for (auto [a, b] : {std::pair{2.0, 2.0}, std::pair{3.0, 1.0}, std::pair{0.0, 1.0}}) {
        try {
            rsprt(a, b);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::BadThresholds);
        }
    }
    EXPECT_THROW(rsprt(0.5, 2.0, 1.5), Error);
}

TEST(TruncatedRule, HorizonOneIsFixedSampleTest) {
    const KernelSequence ks(single(bernoulli(), 1.0));
    const DesignParams p{4.0, 2.0};
    const auto rule = dp_rule_truncated(backward_induction(ks, p, 1));
    EXPECT_EQ(rule.horizon, 1);
    for (double z : {0.0, 0.3, 1.9, 2.0, 2.1, 50.0, kInf}) {
        const auto v = evaluate_rule_at(rule, 1, z);
        EXPECT_TRUE(v.stops_surely());
        EXPECT_EQ(v.reject, z >= 2.0);
    }
}

TEST(TruncatedRule, StopsAtHorizon) {
    const KernelSequence ks(single(bernoulli(), 0.02));
    const auto rule = dp_rule_truncated(backward_induction(ks, {5.0, 5.0}, 4));
    for (double z : {0.01, 1.0, 3.0, 100.0}) EXPECT_TRUE(evaluate_rule_at(rule, 4, z).stops_surely());
    EXPECT_TRUE(evaluate_rule_at(rule, 1, 1.0).continues_surely());
}

TEST(TruncatedRule, HorizonTwoMatchesHandSmoothing) {
    const KernelSequence ks(single(bernoulli(), 1.0));
    const DesignParams p{4.0, 4.0};
    const auto ladder = backward_induction(ks, p, 2);
    const auto rule = dp_rule_truncated(ladder);
    int checked = 0;
    for (double z : ladder.grid->nodes()) {
        const double cont = 1.0 + 0.7 * g(z * 3.0 / 7.0, p) + 0.3 * g(z * 7.0 / 3.0, p);
        const double diff = g(z, p) - cont;
        if (std::abs(diff) < 1e-6) continue;
        EXPECT_EQ(evaluate_rule_at(rule, 1, z).continues_surely(), diff > 0.0) << "z=" << z;
        ++checked;
    }
    EXPECT_GT(checked, 1000);
}

TEST(TruncatedRule, TrivialRegimeNeverContinues) {
    const KernelSequence ks(single(bernoulli(), 10.0));
    const auto rule = dp_rule_truncated(backward_induction(ks, {5.0, 5.0}, 5));
    for (int k = 1; k < 5; ++k) EXPECT_TRUE(rule.stages[k - 1].empty());
    for (double z : {0.1, 1.0, 10.0}) EXPECT_TRUE(evaluate_rule_at(rule, 2, z).stops_surely());
}

TEST(StationaryRule, MatchesThresholdsAndGridPredicate) {
    const auto sv = stationary_value(single(bernoulli(), 0.02), 0.02, {5.0, 5.0});
    const auto t = solve_thresholds(sv);
    const auto rule = dp_rule_stationary(sv);
    ASSERT_EQ(rule.stages.size(), 1u);
    EXPECT_EQ(rule.stages[0].A, t.A);
    EXPECT_EQ(rule.stages[0].B, t.B);
    const auto& grid = sv.rho.grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double z = grid.nodes()[i];
        const bool interval = z > t.A && z < t.B;
        const bool predicate = g(z, sv.params) > sv.c + sv.rho_bar.values()[i];
        const bool edge_cell = (i + 1 < grid.size() && grid.nodes()[i + 1] >= t.A && z <= t.A) ||
                               (i > 0 && grid.nodes()[i - 1] <= t.B && z >= t.B);
        if (!edge_cell) { EXPECT_EQ(interval, predicate) << "z=" << z; }
    }
}

TEST(StationaryRule, StrictlyTrivialThrows) {
    const auto sv = rho_fixed_point(single(bernoulli(), 1.0), 3.0, 2.0);
    try {
        dp_rule_stationary(sv);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TrivialDesign);
    }
}

TEST(StationaryRule, CounterexampleStopsOnlyAtZero) {
    const auto sv = rho_fixed_point(single(uniform_pair(), 1.0), 1.0, 2.0);
    RuleOptions o;
    o.stop_tie = StopTie::Continue;
    const auto rule = dp_rule_stationary(sv, o);
    EXPECT_TRUE(std::isinf(rule.stages[0].B));
    for (int k = 1; k <= 6; ++k) {
        const double z = std::ldexp(1.0, k);  // the only positive ratio after k groups
        EXPECT_TRUE(evaluate_rule_at(rule, k, z).continues_surely()) << "k=" << k;
        const auto at_zero = evaluate_rule_at(rule, k, 0.0);
        EXPECT_TRUE(at_zero.stops_surely());
        EXPECT_FALSE(at_zero.reject);
    }
}

TEST(StationaryRule, BoundaryGammas) {
    const auto sv = stationary_value(single(bernoulli(), 0.02), 0.02, {5.0, 5.0});
    RuleOptions o;
    o.gamma_A = 0.5;
    o.gamma_B = 0.5;
    const auto rule = dp_rule_stationary(sv, o);
    EXPECT_EQ(rule.stages[0].gamma_A, 0.5);
    EXPECT_EQ(evaluate_rule_at(rule, 1, rule.stages[0].A).stop_probability, 0.5);
}

TEST(DecisionRule, TiePolicyAtThreshold) {
    const DesignParams p{3.0, 1.5};
    const auto rej = trivial_rule(p);
    const auto acc = trivial_rule(p, DecisionTie::Accept);
    EXPECT_TRUE(evaluate_rule_at(rej, 1, 2.0).reject);
    EXPECT_FALSE(evaluate_rule_at(acc, 1, 2.0).reject);
    for (const auto& r : {rej, acc}) {
        EXPECT_TRUE(evaluate_rule_at(r, 1, 2.0 * (1 + 1e-6)).reject);
        EXPECT_FALSE(evaluate_rule_at(r, 1, 2.0 * (1 - 1e-6)).reject);
    }
}

TEST(DecisionRule, VerdictsOrderedInZ) {
    const KernelSequence ks(single(bernoulli(), 0.05));
    const auto ladder = backward_induction(ks, {3.0, 1.0}, 6);
    const auto rule = dp_rule_truncated(ladder);
    for (int k = 1; k <= 6; ++k) {
        int last = 0;
        for (double z : ladder.grid->nodes()) {
            const int c = verdict_class(evaluate_rule_at(rule, k, z));
            if (c < 0) continue;
            EXPECT_GE(c, last) << "stage " << k << " z=" << z;
            last = std::max(last, c);
        }
    }
}
