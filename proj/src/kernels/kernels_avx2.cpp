// Built with -mavx2 (no -mfma: the elementwise kernels must round exactly like the
// scalar reference). Only reached after a cpuid check in the dispatcher.
#include "kernels_internal.hpp"

#include <immintrin.h>

#include <limits>

namespace hotda::kernels::detail {
namespace {

void squared_distances(const double* x, const double* yt, std::size_t d, std::size_t m,
                       std::size_t stride, double* out) {
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t k = 0; k < d; ++k) {
            const __m256d xk = _mm256_set1_pd(x[k]);
            const __m256d yk = _mm256_loadu_pd(yt + k * stride + j);
            const __m256d diff = _mm256_sub_pd(xk, yk);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = x[k] - yt[k * stride + j];
            acc += diff * diff;
        }
        out[j] = acc;
    }
}

double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double total = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double total = horizontal_sum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

double max(const double* x, std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vbest = _mm256_set1_pd(best);
        for (; i + 4 <= n; i += 4) vbest = _mm256_max_pd(vbest, _mm256_loadu_pd(x + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vbest);
        for (double v : lanes)
            if (v > best) best = v;
    }
    for (; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

} // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable t{Isa::avx2, squared_distances, dot, axpy, sum, max};
    return t;
}

} // namespace hotda::kernels::detail
