#include <algorithm>
#include <cmath>

#include "rgseq/kernels.hpp"

namespace rgseq::kernels::detail {

void stencil_scalar(const double* padded, std::size_t pad, const StencilTap* taps,
                    std::size_t ntaps, double* out, std::size_t n) {
    std::fill(out, out + n, 0.0);
    for (std::size_t t = 0; t < ntaps; ++t) {
        const double w = taps[t].weight;
        const double* src = padded + pad + taps[t].offset;
        for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + w * src[i];
    }
}

void bellman_scalar(const double* stop, const double* cont, double cost, double* out,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double c = cost + cont[i];
        out[i] = c < stop[i] ? c : stop[i];
    }
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace rgseq::kernels::detail
