#pragma once

#include "hotda/matrix.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hotda {

/// Tolerance on |sum(weights) - 1| for anything that must live on the probability simplex.
inline constexpr double kSimplexTolerance = 1e-9;
/// Support points closer than this (Euclidean) are treated as the same atom when merging.
inline constexpr double kMergeTolerance = 1e-12;

/// Weighted point cloud in R^d: sum_i w_i delta_{x_i}.
class DiscreteMeasure {
  public:
    /// Validates: at least one point, d >= 1, weights non-negative and summing to 1.
    DiscreteMeasure(Matrix support, std::vector<double> weights);

    static DiscreteMeasure uniform(Matrix support);
    static DiscreteMeasure dirac(std::span<const double> point);

    std::size_t size() const noexcept { return support_.rows(); }
    std::size_t dim() const noexcept { return support_.cols(); }
    const Matrix& support() const noexcept { return support_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> point(std::size_t i) const noexcept { return support_.row(i); }

    /// Collapses support points within `tol` of each other into one atom carrying the summed
    /// weight, and drops zero-weight atoms (unless every atom has zero weight, which the
    /// invariants exclude). Atom order follows first occurrence.
    DiscreteMeasure merged(double tol = kMergeTolerance) const;

  private:
    Matrix support_;
    std::vector<double> weights_;
};

/// True when the two measures put the same mass on the same points after merging.
bool same_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double weight_tol = kSimplexTolerance,
                  double point_tol = kMergeTolerance);

enum class GroundMetric { euclidean, squared_euclidean };

/// n x m matrix of non-negative transport costs.
struct CostMatrix {
    CostMatrix() = default;
    /// Validates that every entry is finite and non-negative.
    explicit CostMatrix(Matrix entries, double metric_order = 1.0, GroundMetric ground_metric = GroundMetric::euclidean);

    Matrix entries;
    double metric_order = 1.0;
    GroundMetric ground_metric = GroundMetric::euclidean;

    std::size_t rows() const noexcept { return entries.rows(); }
    std::size_t cols() const noexcept { return entries.cols(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries(i, j); }
    CostMatrix transposed() const { return CostMatrix(entries.transposed(), metric_order, ground_metric); }
};

/// entries(i, j) = ||x_i - y_j||_2^p.
CostMatrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 1.0);
/// entries(i, j) = ||x_i - y_j||_2^2, tagged squared_euclidean with order 1.
CostMatrix squared_euclidean_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

enum class SolverMethod { exact, sinkhorn, sinkhorn_log };
std::string to_string(SolverMethod m);

struct SolverInfo {
    SolverMethod method = SolverMethod::exact;
    std::size_t iterations = 0;
    bool converged = true;
    double epsilon = 0.0;
    /// Marginal violation of the raw iterate before the final feasibility rounding (Sinkhorn only).
    double raw_marginal_violation = 0.0;
};

/// Coupling gamma in U(a, b) with its transport cost.
struct TransportPlan {
    Matrix coupling;
    std::vector<double> row_marginal;
    std::vector<double> col_marginal;
    /// <coupling, C>_F. Never includes an entropic penalty.
    double objective = 0.0;
    /// L1 distance of realized row and column sums to (a, b), summed.
    double marginal_violation = 0.0;
    SolverInfo info;
};

double frobenius(const Matrix& coupling, const Matrix& cost);
double marginal_violation(const Matrix& coupling, std::span<const double> a, std::span<const double> b);
/// H(gamma) = -sum gamma_ij (log gamma_ij - 1), with 0 log 0 = 0.
double entropy(const Matrix& coupling);

/// Throws InvalidInput unless `w` is non-negative, finite and sums to 1 within kSimplexTolerance.
void check_simplex(std::span<const double> w, const char* what);

/// Minimizes <gamma, C>_F over U(a, b) exactly (primal-dual min-cost flow).
/// Marginal violation of the result is at most 1e-9.
TransportPlan solve_exact(std::span<const double> a, std::span<const double> b, const CostMatrix& C);

struct SinkhornOptions {
    double epsilon = 0.0;
    /// Stop once the L1 marginal violation drops to this value.
    double tol = 1e-9;
    std::size_t max_iter = 10000;
    /// Skip the plain scaling iterations and go straight to the stabilized log-domain solver.
    bool force_log_domain = false;
};

/// Entropy-regularized OT: minimizes <gamma, C> - epsilon H(gamma) over U(a, b).
/// Plain matrix scaling is tried first; if the Gibbs kernel underflows or a scaling factor
/// leaves [1e-300, 1e300] the solve restarts in the log domain with epsilon annealing.
/// The final iterate is rounded onto U(a, b) so its reported cost is that of a feasible
/// plan; info.converged is false when max_iter was hit before reaching tol.
TransportPlan solve_sinkhorn(std::span<const double> a, std::span<const double> b, const CostMatrix& C,
                             const SinkhornOptions& options);

/// Median of all entries (used for scale-free default regularization).
double median_entry(const Matrix& m);

} // namespace hotda
