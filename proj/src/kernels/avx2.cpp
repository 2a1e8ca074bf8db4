// Built with -mavx2; only reached after the runtime CPU check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "rgseq/kernels.hpp"

namespace rgseq::kernels::detail {

void stencil_avx2(const double* padded, std::size_t pad, const StencilTap* taps,
                  std::size_t ntaps, double* out, std::size_t n) {
    std::fill(out, out + n, 0.0);
    for (std::size_t t = 0; t < ntaps; ++t) {
        const double w = taps[t].weight;
        const __m256d wv = _mm256_set1_pd(w);
        const double* src = padded + pad + taps[t].offset;
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            const __m256d acc = _mm256_loadu_pd(out + i);
            const __m256d x = _mm256_loadu_pd(src + i);
            _mm256_storeu_pd(out + i, _mm256_add_pd(acc, _mm256_mul_pd(wv, x)));
        }
        for (; i < n; ++i) out[i] = out[i] + w * src[i];
    }
}

void bellman_avx2(const double* stop, const double* cont, double cost, double* out,
                  std::size_t n) {
    const __m256d cv = _mm256_set1_pd(cost);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d c = _mm256_add_pd(cv, _mm256_loadu_pd(cont + i));
        // min_pd(a, b) = a < b ? a : b, the same selection as the scalar loop.
        _mm256_storeu_pd(out + i, _mm256_min_pd(c, _mm256_loadu_pd(stop + i)));
    }
    for (; i < n; ++i) {
        const double c = cost + cont[i];
        out[i] = c < stop[i] ? c : stop[i];
    }
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        m = _mm256_max_pd(m, _mm256_andnot_pd(sign, d));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double r = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

}  // namespace rgseq::kernels::detail
