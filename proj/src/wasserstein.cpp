#include "hotda/wasserstein.hpp"

#include "hotda/error.hpp"

#include <algorithm>
#include <cmath>

namespace hotda {

double auto_epsilon(const Matrix& cost) {
    const double med = median_entry(cost);
    if (med > 0.0) return 0.01 * med;
    const double mx = cost.empty() ? 0.0 : *std::max_element(cost.data().begin(), cost.data().end());
    return mx > 0.0 ? 0.01 * mx : 1.0;
}

std::string to_string(Backend::Kind kind) {
    switch (kind) {
    case Backend::Kind::automatic: return "auto";
    case Backend::Kind::exact: return "exact";
    case Backend::Kind::sinkhorn: return "sinkhorn";
    }
    return "unknown";
}

namespace {

Backend::Kind resolve(const Backend& backend, const CostMatrix& C) {
    if (backend.kind != Backend::Kind::automatic) return backend.kind;
    return C.rows() * C.cols() <= kExactSizeLimit ? Backend::Kind::exact : Backend::Kind::sinkhorn;
}

} // namespace

TransportPlan solve(std::span<const double> a, std::span<const double> b, const CostMatrix& C, const Backend& backend) {
    if (resolve(backend, C) == Backend::Kind::exact) return solve_exact(a, b, C);
    SinkhornOptions opt;
    opt.epsilon = backend.epsilon > 0.0 ? backend.epsilon : auto_epsilon(C.entries);
    opt.tol = backend.tol;
    opt.max_iter = backend.max_iter;
    return solve_sinkhorn(a, b, C, opt);
}

WassersteinResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, const Backend& backend) {
    detail::require(p >= 1.0, "wasserstein: order p must be >= 1");
    const CostMatrix C = cost_matrix(mu, nu, p);
    WassersteinResult r;
    r.order = p;
    r.backend = resolve(backend, C);
    r.plan = solve(mu.weights(), nu.weights(), C, backend);
    r.epsilon = r.plan.info.method == SolverMethod::exact ? 0.0 : r.plan.info.epsilon;
    const double obj = std::max(0.0, r.plan.objective);
    r.distance = p == 1.0 ? obj : std::pow(obj, 1.0 / p);
    return r;
}

} // namespace hotda
