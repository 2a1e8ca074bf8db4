#include <atomic>

#include "rgseq/errors.hpp"
#include "rgseq/kernels.hpp"

namespace rgseq::kernels {

namespace {

const KernelTable kScalar{Isa::Scalar, "scalar", &detail::stencil_scalar,
                          &detail::bellman_scalar, &detail::max_abs_diff_scalar};

#if defined(RGSEQ_HAVE_AVX2)
const KernelTable kAvx2{Isa::Avx2, "avx2", &detail::stencil_avx2, &detail::bellman_avx2,
                        &detail::max_abs_diff_avx2};
#endif

const KernelTable* detect() {
    if (const KernelTable* t = avx2_kernels()) return t;
    return &kScalar;
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{detect()};
    return slot;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#if defined(RGSEQ_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

bool select_kernels(Isa isa) {
    const KernelTable* t = isa == Isa::Scalar ? &kScalar : avx2_kernels();
    if (!t) return false;
    active_slot().store(t, std::memory_order_release);
    return true;
}

void stencil(std::span<const double> padded, std::size_t pad, std::span<const StencilTap> taps,
             std::span<double> out) {
    for (const auto& t : taps) {
        const auto lo = static_cast<std::ptrdiff_t>(pad) + t.offset;
        if (lo < 0 || static_cast<std::size_t>(lo) + out.size() > padded.size()) {
            throw Error(ErrorCode::InvalidArgument, "stencil tap reaches outside the padded input");
        }
    }
    active_kernels().stencil(padded.data(), pad, taps.data(), taps.size(), out.data(), out.size());
}

void bellman(std::span<const double> stop, std::span<const double> cont, double cost,
             std::span<double> out) {
    if (stop.size() != out.size() || cont.size() != out.size()) {
        throw Error(ErrorCode::InvalidArgument, "bellman: length mismatch");
    }
    active_kernels().bellman(stop.data(), cont.data(), cost, out.data(), out.size());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "max_abs_diff: length mismatch");
    return active_kernels().max_abs_diff(a.data(), b.data(), a.size());
}

}  // namespace rgseq::kernels
