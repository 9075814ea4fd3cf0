#include "hotda/hierarchical.hpp"

#include "hotda/error.hpp"

#include <cmath>

namespace hotda {

MeasureOfMeasures::MeasureOfMeasures(std::vector<DiscreteMeasure> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    detail::require(!atoms_.empty(), "MeasureOfMeasures: no atoms");
    detail::require(atoms_.size() == weights_.size(), "MeasureOfMeasures: atoms and weights differ in length");
    for (const auto& a : atoms_)
        detail::require(a.dim() == atoms_.front().dim(), "MeasureOfMeasures: atoms have different dimensions");
    check_simplex(weights_, "MeasureOfMeasures");
}

MeasureOfMeasures MeasureOfMeasures::uniform(std::vector<DiscreteMeasure> atoms) {
    const std::size_t k = atoms.size();
    detail::require(k >= 1, "MeasureOfMeasures::uniform: no atoms");
    return MeasureOfMeasures(std::move(atoms), std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Matrix inner_cost_matrix(const MeasureOfMeasures& phi, const MeasureOfMeasures& psi, double p, const Backend& backend) {
    if (phi.dim() != psi.dim()) detail::reject("inner_cost_matrix: dimension mismatch");
    Matrix W(phi.size(), psi.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        for (std::size_t j = 0; j < psi.size(); ++j) W(i, j) = wasserstein(phi.atom(i), psi.atom(j), p, backend).distance;
    return W;
}

HierarchicalResult hierarchical_wasserstein(const MeasureOfMeasures& phi, const MeasureOfMeasures& psi, double p,
                                            const Backend& inner, const Backend& outer, OuterCost convention) {
    detail::require(p >= 1.0, "hierarchical_wasserstein: order p must be >= 1");
    HierarchicalResult r;
    r.order = p;
    r.inner_cost = inner_cost_matrix(phi, psi, p, inner);

    Matrix outer_cost = r.inner_cost;
    if (convention == OuterCost::power && p != 1.0)
        for (double& v : outer_cost.data()) v = std::pow(v, p);
    r.outer_plan = solve(phi.weights(), psi.weights(), CostMatrix(std::move(outer_cost), p), outer);

    const double obj = std::max(0.0, r.outer_plan.objective);
    r.distance = (convention == OuterCost::literal || p == 1.0) ? obj : std::pow(obj, 1.0 / p);
    return r;
}

DiscreteMeasure flatten(const MeasureOfMeasures& phi) {
    Matrix pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const DiscreteMeasure& atom = phi.atom(i);
        for (std::size_t k = 0; k < atom.size(); ++k) {
            pts.push_row(atom.point(k));
            w.push_back(phi.weights()[i] * atom.weights()[k]);
        }
    }
    // Atom and outer weights are each on the simplex only to within tolerance.
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(pts), std::move(w)).merged();
}

} // namespace hotda
