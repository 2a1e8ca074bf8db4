#pragma once

// Data-parallel inner loops of the value recursion. Every routine has a scalar
// reference implementation and, where the CPU allows, a SIMD variant chosen at
// runtime. Variants must agree bit for bit: they perform the same IEEE
// operations in the same order per element and never contract into FMA.

#include <cstddef>
#include <span>
#include <string_view>

namespace rgseq::kernels {

/// One term of a shifted-stencil sum: out[i] += weight * in[i + offset].
struct StencilTap {
    std::ptrdiff_t offset;
    double weight;
};

/// out[i] = sum_t taps[t].weight * padded[pad + i + taps[t].offset], accumulated
/// in tap order starting from +0.0. `padded` must cover every referenced index.
using StencilFn = void (*)(const double* padded, std::size_t pad, const StencilTap* taps,
                           std::size_t ntaps, double* out, std::size_t n);

/// out[i] = min(stop[i], cost + cont[i]).
using BellmanFn = void (*)(const double* stop, const double* cont, double cost, double* out,
                           std::size_t n);

/// max_i |a[i] - b[i]|.
using MaxAbsDiffFn = double (*)(const double* a, const double* b, std::size_t n);

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    std::string_view name;
    StencilFn stencil;
    BellmanFn bellman;
    MaxAbsDiffFn max_abs_diff;
};

const KernelTable& scalar_kernels();

/// nullptr when the binary was built without the variant or the CPU lacks it.
const KernelTable* avx2_kernels();

/// The table used by the library; defaults to the widest supported ISA.
const KernelTable& active_kernels();

/// Force a particular variant. Returns false (and changes nothing) if unavailable.
bool select_kernels(Isa isa);

// Convenience wrappers over the active table.
void stencil(std::span<const double> padded, std::size_t pad, std::span<const StencilTap> taps,
             std::span<double> out);
void bellman(std::span<const double> stop, std::span<const double> cont, double cost,
             std::span<double> out);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

namespace detail {
void stencil_scalar(const double* padded, std::size_t pad, const StencilTap* taps,
                    std::size_t ntaps, double* out, std::size_t n);
void bellman_scalar(const double* stop, const double* cont, double cost, double* out,
                    std::size_t n);
double max_abs_diff_scalar(const double* a, const double* b, std::size_t n);

#if defined(RGSEQ_HAVE_AVX2)
void stencil_avx2(const double* padded, std::size_t pad, const StencilTap* taps,
                  std::size_t ntaps, double* out, std::size_t n);
void bellman_avx2(const double* stop, const double* cont, double cost, double* out,
                  std::size_t n);
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n);
#endif
}  // namespace detail

}  // namespace rgseq::kernels
