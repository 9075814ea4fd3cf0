#include "kernels_internal.hpp"

#include "hotda/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace hotda::kernels {
namespace {

Isa initial_isa() noexcept {
    Isa isa = best_supported();
    if (const char* env = std::getenv("HOTDA_ISA")) {
        const std::string_view want(env);
        if (want == "scalar") isa = Isa::scalar;
        else if (want == "avx2" && supported(Isa::avx2)) isa = Isa::avx2;
    }
    return isa;
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> t{&table(initial_isa())};
    return t;
}

} // namespace

std::string_view name(Isa isa) noexcept {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(HOTDA_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

Isa best_supported() noexcept { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
    if (!supported(isa)) throw InvalidInput("kernel variant not supported on this CPU: " + std::string(name(isa)));
#if defined(HOTDA_HAVE_AVX2)
    if (isa == Isa::avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

Isa active() noexcept { return current().load()->isa; }
void set_active(Isa isa) { current().store(&table(isa)); }
const KernelTable& active_table() noexcept { return *current().load(); }

void squared_distances(std::span<const double> x, std::span<const double> yt, std::size_t m,
                       std::span<double> out) {
    const std::size_t d = x.size();
    hotda::detail::require(out.size() >= m, "squared_distances: output too small");
    hotda::detail::require(yt.size() >= d * m, "squared_distances: transposed block too small");
    active_table().squared_distances(x.data(), yt.data(), d, m, m, out.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
    hotda::detail::require(a.size() == b.size(), "dot: length mismatch");
    return active_table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    hotda::detail::require(x.size() == y.size(), "axpy: length mismatch");
    active_table().axpy(alpha, x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) { return active_table().sum(x.data(), x.size()); }
double max(std::span<const double> x) { return active_table().max(x.data(), x.size()); }

} // namespace hotda::kernels
