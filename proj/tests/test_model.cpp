#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "rgseq/errors.hpp"
#include "rgseq/model.hpp"
#include "rgseq/rng.hpp"
#include "support.hpp"

using namespace rgseq;
using rgseq::fixtures::bernoulli;
using rgseq::fixtures::uniform_pair;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::ConfigError;
}

// Every path of n observations, collapsed by log-LR value.
struct PathLaw {
    struct Atom {
        double log_lr;
        double p0 = 0.0;
        double p1 = 0.0;
    };
    std::map<double, Atom> atoms;  // keyed by log_lr rounded to 1e-9
};

PathLaw enumerate_paths(const ObservationModel& m, int n) {
    PathLaw law;
    const std::size_t k = m.alphabet_size();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= k;
    for (std::size_t code = 0; code < total; ++code) {
        double p0 = 1.0, p1 = 1.0;
        std::size_t c = code;
        for (int i = 0; i < n; ++i) {
            p0 *= m.f0()[c % k];
            p1 *= m.f1()[c % k];
            c /= k;
        }
        if (p0 == 0.0 && p1 == 0.0) continue;
        const double l = p0 == 0.0 ? kInf : (p1 == 0.0 ? -kInf : std::log(p1 / p0));
        // Paths with equal counts give bitwise different logs; bucket them.
        const double key = std::isfinite(l) ? std::round(l * 1e9) / 1e9 : l;
        auto [it, fresh] = law.atoms.try_emplace(key, PathLaw::Atom{l});
        it->second.p0 += p0;
        it->second.p1 += p1;
    }
    return law;
}

}  // namespace

TEST(MakeModel, IdenticalPmfsAreIndistinguishable) {
    EXPECT_EQ(code_of([] { make_model({0.5, 0.5}, {0.5, 0.5}); }), ErrorCode::IndistinguishableHypotheses);
}

TEST(MakeModel, AcceptsBernoulliPair) {
    const auto m = make_model({0.7, 0.3}, {0.3, 0.7});
    EXPECT_EQ(m.alphabet_size(), 2u);
}

TEST(MakeModel, AcceptsZeroSymbolUnderH0) {
    const auto m = make_model({1.0, 0.0}, {0.5, 0.5});
    EXPECT_TRUE(single_obs_lr(m).has_infinite_atom());
}

TEST(MakeModel, RejectsBadPmfs) {
    EXPECT_EQ(code_of([] { make_model({0.6, 0.3}, {0.3, 0.7}); }), ErrorCode::NotAPmf);
    EXPECT_EQ(code_of([] { make_model({1.2, -0.2}, {0.3, 0.7}); }), ErrorCode::NotAPmf);
    EXPECT_EQ(code_of([] { make_model({0.5, 0.5}, {1.0}); }), ErrorCode::NotAPmf);
}

TEST(SingleObsLr, BernoulliAtoms) {
    const auto lr = single_obs_lr(bernoulli());
    ASSERT_EQ(lr.size(), 2u);
    EXPECT_NEAR(lr.atoms()[0].log_lr, std::log(3.0 / 7.0), 1e-15);
    EXPECT_NEAR(lr.atoms()[0].p0, 0.7, 1e-15);
    EXPECT_NEAR(lr.atoms()[0].p1, 0.3, 1e-15);
    EXPECT_NEAR(lr.atoms()[1].log_lr, std::log(7.0 / 3.0), 1e-15);
    EXPECT_NEAR(lr.atoms()[1].p0, 0.3, 1e-15);
    EXPECT_NEAR(lr.atoms()[1].p1, 0.7, 1e-15);
}

TEST(SingleObsLr, UniformReductionHasZeroRatio) {
    const auto lr = single_obs_lr(uniform_pair());
    ASSERT_EQ(lr.size(), 2u);
    EXPECT_EQ(lr.atoms()[0].log_lr, -kInf);
    EXPECT_EQ(lr.atoms()[0].p0, 0.5);
    EXPECT_EQ(lr.atoms()[0].p1, 0.0);
    EXPECT_NEAR(lr.atoms()[1].log_lr, std::log(2.0), 1e-15);
    EXPECT_EQ(lr.atoms()[1].p0, 0.5);
    EXPECT_EQ(lr.atoms()[1].p1, 1.0);
}

TEST(SingleObsLr, InfiniteAtomCarriesNoH0Mass) {
    const auto lr = single_obs_lr(make_model({1.0, 0.0}, {0.5, 0.5}));
    ASSERT_EQ(lr.size(), 2u);
    EXPECT_NEAR(lr.atoms()[0].log_lr, std::log(0.5), 1e-15);
    EXPECT_EQ(lr.atoms()[0].p0, 1.0);
    EXPECT_EQ(lr.atoms()[0].p1, 0.5);
    EXPECT_EQ(lr.atoms()[1].log_lr, kInf);
    EXPECT_EQ(lr.atoms()[1].p0, 0.0);
    EXPECT_EQ(lr.atoms()[1].p1, 0.5);
    EXPECT_NEAR(lr.p1_finite(), 0.5, 1e-15);
}

TEST(GroupLr, EmptyGroupIsPointMassAtOne) {
    const auto lr = group_lr(bernoulli(), 0);
    ASSERT_EQ(lr.size(), 1u);
    EXPECT_EQ(lr.atoms()[0].log_lr, 0.0);
    EXPECT_EQ(lr.atoms()[0].p0, 1.0);
    EXPECT_EQ(lr.atoms()[0].p1, 1.0);
}

TEST(GroupLr, TwoBernoulliObservations) {
    const auto lr = group_lr(bernoulli(), 2);
    ASSERT_EQ(lr.size(), 3u);
    const double l = std::log(3.0 / 7.0);
    EXPECT_NEAR(lr.atoms()[0].log_lr, 2 * l, 1e-14);
    EXPECT_NEAR(lr.atoms()[0].p0, 0.49, 1e-15);
    EXPECT_NEAR(lr.atoms()[0].p1, 0.09, 1e-15);
    EXPECT_NEAR(lr.atoms()[1].log_lr, 0.0, 1e-14);
    EXPECT_NEAR(lr.atoms()[1].p0, 0.42, 1e-15);
    EXPECT_NEAR(lr.atoms()[1].p1, 0.42, 1e-15);
    EXPECT_NEAR(lr.atoms()[2].log_lr, -2 * l, 1e-14);
    EXPECT_NEAR(lr.atoms()[2].p0, 0.09, 1e-15);
    EXPECT_NEAR(lr.atoms()[2].p1, 0.49, 1e-15);
}

TEST(GroupLr, ThreeObservationsMatchPathEnumeration) {
    const auto m = bernoulli();
    const auto lr = group_lr(m, 3, 0.0);
    ASSERT_EQ(lr.size(), 4u);
    const auto law = enumerate_paths(m, 3);
    ASSERT_EQ(law.atoms.size(), 4u);
    std::size_t i = 0;
    for (const auto& [key, p] : law.atoms) {
        EXPECT_NEAR(lr.atoms()[i].log_lr, p.log_lr, 1e-12);
        EXPECT_NEAR(lr.atoms()[i].p0, p.p0, 1e-15);
        EXPECT_NEAR(lr.atoms()[i].p1, p.p1, 1e-15);
        ++i;
    }
    // Binomial(3, 0.3) weights under H0, ordered by increasing count of ones.
    const double b[] = {0.343, 0.441, 0.189, 0.027};
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(lr.atoms()[k].p0, b[k], 1e-15);
}

TEST(GroupLr, MomentsMatchPathEnumerationUpToFour) {
    const ObservationModel models[] = {bernoulli(), uniform_pair(), make_model({0.5, 0.5, 0.0}, {0.25, 0.5, 0.25})};
    for (const auto& m : models) {
        for (int n = 0; n <= 4; ++n) {
            const auto lr = group_lr(m, n, 0.0);
            const auto law = enumerate_paths(m, n);
            double s0 = 0, s1 = 0, ez = 0, root = 0;
            for (const auto& a : lr.atoms()) {
                s0 += a.p0;
                s1 += a.p1;
                if (std::isfinite(a.log_lr)) {
                    EXPECT_NEAR(a.p1, a.p0 * std::exp(a.log_lr), 1e-10 * std::max(a.p1, 1e-300));
                    ez += a.p0 * std::exp(a.log_lr);
                    root += a.p0 * std::exp(0.5 * a.log_lr);
                }
                if (a.log_lr == kInf) { EXPECT_EQ(a.p0, 0.0); }
                if (a.log_lr == -kInf) { EXPECT_EQ(a.p1, 0.0); }
            }
            EXPECT_NEAR(s0, 1.0, 1e-10);
            EXPECT_NEAR(s1, 1.0, 1e-10);
            double ez_paths = 0, root_paths = 0;
            for (const auto& [key, p] : law.atoms) {
                if (!std::isfinite(p.log_lr)) continue;
                ez_paths += p.p0 * std::exp(p.log_lr);
                root_paths += p.p0 * std::exp(0.5 * p.log_lr);
            }
            EXPECT_NEAR(ez, ez_paths, 1e-12);
            EXPECT_NEAR(ez, lr.p1_finite(), 1e-12);
            EXPECT_LE(ez, 1.0 + 1e-12);
            if (!lr.has_infinite_atom()) { EXPECT_NEAR(ez, 1.0, 1e-12); }
            EXPECT_NEAR(root, root_paths, 1e-12);
            EXPECT_NEAR(root, std::pow(m.hellinger_affinity(), n), 1e-12);
        }
    }
}

TEST(GroupLr, AtomCapIsEnforced) {
    const auto m = make_model({0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1 + 0.0});
    EXPECT_EQ(code_of([&] { group_lr(m, 12, 0.0, 20); }), ErrorCode::AtomExplosion);
}

TEST(StageKernel, OnePerGroup) {
    const auto m = bernoulli();
    const auto k = make_stage_kernel(m, std::vector<int>{1}, std::vector<double>{1.0}, CostModel::linear(0.0, 1.0));
    EXPECT_NEAR(k.mean_cost, 1.0, 1e-15);
    const auto direct = single_obs_lr(m);
    ASSERT_EQ(k.group_lr.size(), direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        EXPECT_EQ(k.group_lr.atoms()[i].log_lr, direct.atoms()[i].log_lr);
        EXPECT_EQ(k.group_lr.atoms()[i].p0, direct.atoms()[i].p0);
    }
}

TEST(StageKernel, MeanCostWithEmptyGroups) {
    const auto k = make_stage_kernel(bernoulli(), std::vector<int>{0, 2}, std::vector<double>{0.5, 0.5},
                                     CostModel::linear(1.0, 1.0));
    EXPECT_NEAR(k.mean_cost, 2.0, 1e-12);
}

TEST(StageKernel, HellingerRate) {
    const auto k = rgseq::fixtures::single(bernoulli(), 1.0);
    EXPECT_NEAR(k.hellinger_rate, 2.0 * std::sqrt(0.21), 1e-15);
    EXPECT_NEAR(k.hellinger_rate, 0.916515, 1e-6);

    // Monte Carlo estimate of E0 Z^{1/2}.
    const Philox4x32 gen(7);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = gen.uniform(0, i) < 0.3 ? std::sqrt(7.0 / 3.0) : std::sqrt(3.0 / 7.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
    EXPECT_LT(std::abs(mean - k.hellinger_rate), 4 * se);
}

TEST(StageKernel, HellingerRateMixesGroupSizes) {
    const auto m = bernoulli();
    const auto k = make_stage_kernel(m, std::vector<int>{0, 1, 3}, std::vector<double>{0.2, 0.5, 0.3},
                                     CostModel::linear(1.0, 1.0));
    const double h = m.hellinger_affinity();
    EXPECT_NEAR(k.hellinger_rate, 0.2 + 0.5 * h + 0.3 * h * h * h, 1e-15);
    EXPECT_LT(k.hellinger_rate, 1.0);
}

TEST(StageKernel, ZeroCostIsRejected) {
    EXPECT_EQ(code_of([] {
                  make_stage_kernel(bernoulli(), std::vector<int>{0, 1}, std::vector<double>{0.5, 0.5},
                                    CostModel::linear(0.0, 1.0));
              }),
              ErrorCode::ZeroCost);
}

TEST(StageKernel, UnusedZeroCostSizeIsAllowed) {
    const auto k = make_stage_kernel(bernoulli(), std::vector<int>{0, 1}, std::vector<double>{0.0, 1.0},
                                     CostModel::linear(0.0, 1.0));
    EXPECT_NEAR(k.mean_cost, 1.0, 1e-15);
}

TEST(KernelSequence, PrefixThenTail) {
    const auto m = bernoulli();
    const auto groups = make_group_model({1, 2}, {0.5, 0.5}, {{1.0, 0.0}});
    const auto seq = make_kernels(m, groups, CostModel::linear(0.0, 1.0));
    EXPECT_EQ(seq.prefix_length(), 1u);
    EXPECT_NEAR(seq.at(1).mean_cost, 1.0, 1e-15);
    EXPECT_NEAR(seq.at(2).mean_cost, 1.5, 1e-15);
    EXPECT_NEAR(seq.at(50).mean_cost, 1.5, 1e-15);
}

TEST(GroupModel, RejectsBadPmf) {
    EXPECT_EQ(code_of([] { make_group_model({1, 2}, {0.5, 0.4}); }), ErrorCode::NotAPmf);
    EXPECT_THROW(make_group_model({1, 1}, {0.5, 0.5}), Error);
}
