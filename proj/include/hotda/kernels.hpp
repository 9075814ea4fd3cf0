#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference implementation and,
// where the CPU supports it, a vectorized variant picked at runtime. The elementwise
// kernels (squared_distances, axpy, max) give bit-identical results across variants;
// the reductions (dot, sum) may differ in the last few ulps because lanes are summed
// in a different order.

namespace hotda::kernels {

enum class Isa { scalar, avx2 };

std::string_view name(Isa isa) noexcept;

struct KernelTable {
    Isa isa;
    // out[j] = sum_k (x[k] - yt[k * stride + j])^2 for j < m, where yt holds the
    // other point set transposed (coordinate k of point j at yt[k * stride + j]).
    void (*squared_distances)(const double* x, const double* yt, std::size_t d, std::size_t m,
                              std::size_t stride, double* out);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*max)(const double* x, std::size_t n);
};

bool supported(Isa isa) noexcept;
Isa best_supported() noexcept;

/// Table for a specific variant. Throws InvalidInput if the CPU lacks it.
const KernelTable& table(Isa isa);

/// Variant used by the library. Defaults to best_supported(), overridable through the
/// HOTDA_ISA environment variable ("scalar" or "avx2") or set_active().
Isa active() noexcept;
void set_active(Isa isa);
const KernelTable& active_table() noexcept;

// Convenience wrappers over the active table.
void squared_distances(std::span<const double> x, std::span<const double> yt, std::size_t m,
                       std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> x);
double max(std::span<const double> x);

} // namespace hotda::kernels
