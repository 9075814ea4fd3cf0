#include "kernels_internal.hpp"

#include <limits>

namespace hotda::kernels::detail {
namespace {

void squared_distances(const double* x, const double* yt, std::size_t d, std::size_t m,
                       std::size_t stride, double* out) {
    for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = x[k] - yt[k * stride + j];
            acc += diff * diff;
        }
        out[j] = acc;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max(const double* x, std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

} // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable t{Isa::scalar, squared_distances, dot, axpy, sum, max};
    return t;
}

} // namespace hotda::kernels::detail
