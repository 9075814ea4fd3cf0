#pragma once

#include "hotda/ot_core.hpp"

#include <string>

namespace hotda {

/// Instances with rows * cols at or below this go to the exact solver under Backend::automatic().
inline constexpr std::size_t kExactSizeLimit = 40000;

/// Which OT solver backs a distance computation.
struct Backend {
    enum class Kind { automatic, exact, sinkhorn };
    Kind kind = Kind::automatic;
    /// Sinkhorn regularization; <= 0 selects auto_epsilon() of the cost matrix.
    double epsilon = 0.0;
    double tol = 1e-9;
    std::size_t max_iter = 10000;

    static Backend automatic() { return {}; }
    static Backend exact() { return {Kind::exact}; }
    static Backend sinkhorn(double epsilon = 0.0) { return {Kind::sinkhorn, epsilon}; }
};

/// 0.01 * median(C); falls back to 0.01 * max(C), then 1, for degenerate all-zero costs.
double auto_epsilon(const Matrix& cost);

/// Solves with the requested backend, resolving `automatic` by instance size.
TransportPlan solve(std::span<const double> a, std::span<const double> b, const CostMatrix& C, const Backend& backend);

struct WassersteinResult {
    double distance = 0.0;
    TransportPlan plan;
    double order = 1.0;
    /// Resolved backend: exact or sinkhorn, never automatic.
    Backend::Kind backend = Backend::Kind::exact;
    /// Regularization actually used (0 for exact).
    double epsilon = 0.0;
};

std::string to_string(Backend::Kind kind);

/// W_p(mu, nu) = (min_gamma <gamma, ||x - y||^p>)^(1/p).
WassersteinResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 1.0,
                              const Backend& backend = Backend::automatic());

} // namespace hotda
