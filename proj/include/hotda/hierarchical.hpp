#pragma once

#include "hotda/wasserstein.hpp"

#include <vector>

namespace hotda {

/// Weighted collection of discrete measures: sum_i alpha_i delta_{rho_i}.
class MeasureOfMeasures {
  public:
    /// Validates: at least one atom, weights on the simplex, all atoms share one dimension.
    MeasureOfMeasures(std::vector<DiscreteMeasure> atoms, std::vector<double> weights);
    static MeasureOfMeasures uniform(std::vector<DiscreteMeasure> atoms);

    std::size_t size() const noexcept { return atoms_.size(); }
    std::size_t dim() const noexcept { return atoms_.front().dim(); }
    const DiscreteMeasure& atom(std::size_t i) const noexcept { return atoms_[i]; }
    const std::vector<DiscreteMeasure>& atoms() const noexcept { return atoms_; }
    std::span<const double> weights() const noexcept { return weights_; }

  private:
    std::vector<DiscreteMeasure> atoms_;
    std::vector<double> weights_;
};

/// How the outer problem consumes the inner distances.
enum class OuterCost {
    /// Outer cost W_p^p, distance = objective^(1/p): the metric HW_p.
    power,
    /// Outer cost W_p itself and the objective reported unrooted; matches the structure-matching
    /// objective used by the adaptation pipeline. Identical to `power` for p = 1.
    literal,
};

/// h x l matrix of W_p(rho_i, varrho_j).
Matrix inner_cost_matrix(const MeasureOfMeasures& phi, const MeasureOfMeasures& psi, double p = 1.0,
                         const Backend& backend = Backend::exact());

struct HierarchicalResult {
    double distance = 0.0;
    /// h x l coupling between the atoms.
    TransportPlan outer_plan;
    /// W_p values, unpowered.
    Matrix inner_cost;
    double order = 1.0;
};

HierarchicalResult hierarchical_wasserstein(const MeasureOfMeasures& phi, const MeasureOfMeasures& psi, double p = 1.0,
                                            const Backend& inner = Backend::exact(),
                                            const Backend& outer = Backend::exact(), OuterCost convention = OuterCost::power);

/// Mixture sum_i alpha_i rho_i as a single measure (near-duplicate points merged).
DiscreteMeasure flatten(const MeasureOfMeasures& phi);

} // namespace hotda
