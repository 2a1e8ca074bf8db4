#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <vector>

#include "rgseq/kernels.hpp"
#include "rgseq/rng.hpp"
#include "rgseq/value_iteration.hpp"
#include "support.hpp"

using namespace rgseq;
namespace kn = rgseq::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class IsaGuard {
public:
    IsaGuard() : saved_(kn::active_kernels().isa) {}
    ~IsaGuard() { kn::select_kernels(saved_); }

private:
    kn::Isa saved_;
};

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
    EXPECT_EQ(kn::scalar_kernels().isa, kn::Isa::Scalar);
    EXPECT_TRUE(kn::select_kernels(kn::Isa::Scalar));
    EXPECT_EQ(kn::active_kernels().isa, kn::Isa::Scalar);
    kn::select_kernels(kn::avx2_kernels() ? kn::Isa::Avx2 : kn::Isa::Scalar);
}

TEST(Kernels, Avx2MatchesScalarBitwise) {
    const kn::KernelTable* simd = kn::avx2_kernels();
    if (!simd) GTEST_SKIP() << "AVX2 variant not available";
    const kn::KernelTable& ref = kn::scalar_kernels();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1023u, 2048u}) {
        const std::size_t pad = 9;
        std::vector<double> padded(n + 2 * pad);
        for (auto& x : padded) x = u(rng);
        const std::vector<kn::StencilTap> taps = {{-9, 0.125}, {-1, 0.3}, {0, 1e-17}, {2, 0.7}, {9, 0.33}};
        std::vector<double> a(n), b(n);
        ref.stencil(padded.data(), pad, taps.data(), taps.size(), a.data(), n);
        simd->stencil(padded.data(), pad, taps.data(), taps.size(), b.data(), n);
        EXPECT_TRUE(same_bits(a, b)) << "stencil n=" << n;

        std::vector<double> stop(n), cont(n);
        for (std::size_t i = 0; i < n; ++i) {
            stop[i] = u(rng);
            cont[i] = i % 5 == 0 ? stop[i] - 0.25 : u(rng);
        }
        ref.bellman(stop.data(), cont.data(), 0.25, a.data(), n);
        simd->bellman(stop.data(), cont.data(), 0.25, b.data(), n);
        EXPECT_TRUE(same_bits(a, b)) << "bellman n=" << n;

        EXPECT_EQ(ref.max_abs_diff(stop.data(), cont.data(), n), simd->max_abs_diff(stop.data(), cont.data(), n));
    }
}

TEST(Kernels, FixedPointIsIsaIndependent) {
    if (!kn::avx2_kernels()) GTEST_SKIP() << "AVX2 variant not available";
    IsaGuard guard;
    const auto k = make_stage_kernel(fixtures::bernoulli(), std::vector<int>{1, 2}, std::vector<double>{0.5, 0.5},
                                     CostModel::linear(0.0, 0.02));
    ASSERT_TRUE(kn::select_kernels(kn::Isa::Scalar));
    const auto a = stationary_value(k, k.mean_cost, {5.0, 5.0});
    ASSERT_TRUE(kn::select_kernels(kn::Isa::Avx2));
    const auto b = stationary_value(k, k.mean_cost, {5.0, 5.0});
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_TRUE(same_bits(a.rho.values(), b.rho.values()));
    EXPECT_TRUE(same_bits(a.rho_bar.values(), b.rho_bar.values()));
}

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformRangeAndIndependenceOfStreams) {
    const Philox4x32 gen(42);
    double sum = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = gen.uniform(3, i);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 10000, 0.5, 0.02);
    EXPECT_NE(gen.uniform(0, 0), gen.uniform(1, 0));
    EXPECT_EQ(gen.uniform(5, 7), Philox4x32(42).uniform(5, 7));
    ReplicationStream s(gen, 5);
    for (int i = 0; i < 7; ++i) s.uniform();
    EXPECT_EQ(s.uniform(), gen.uniform(5, 7));
}
