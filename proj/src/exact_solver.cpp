// Exact discrete OT as a min-cost flow on the complete bipartite graph sources -> sinks.
// Successive shortest paths: each phase runs a dense Dijkstra on reduced costs from every
// source with remaining supply, stops at the first sink with remaining demand, pushes the
// bottleneck amount along the path and updates the node potentials. Reduced costs stay
// non-negative, so the final flow is optimal; potentials double as a dual certificate.
#include "hotda/error.hpp"
#include "hotda/ot_core.hpp"

#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

namespace hotda {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class FlowSolver {
  public:
    FlowSolver(std::span<const double> a, std::span<const double> b, const Matrix& cost)
        : n_(a.size()), m_(b.size()), cost_(cost), flow_(n_, m_, 0.0), supply_(a.begin(), a.end()),
          demand_(b.begin(), b.end()), potential_(n_ + m_, 0.0), dist_(n_ + m_), pred_(n_ + m_),
          settled_(n_ + m_) {}

    void run() {
        const std::size_t max_phases = 4 * (n_ + m_) * (n_ + m_) + 64;
        std::size_t phase = 0;
        while (remaining_supply() > kMassFloor && remaining_demand() > kMassFloor) {
            if (++phase > max_phases) {
                std::ostringstream os;
                os << "solve_exact: no convergence after " << max_phases << " augmentations (n=" << n_ << ", m=" << m_
                   << ", remaining supply " << remaining_supply() << ")";
                throw NumericalError(os.str());
            }
            const std::size_t sink = shortest_path();
            if (sink == kNone) {
                std::ostringstream os;
                os << "solve_exact: no augmenting path at phase " << phase << " (remaining supply "
                   << remaining_supply() << ")";
                throw NumericalError(os.str());
            }
            augment(sink);
        }
        phases_ = phase;
    }

    Matrix take_flow() { return std::move(flow_); }
    std::size_t phases() const noexcept { return phases_; }

  private:
    // Mass below this is treated as exhausted; keeps round-off crumbs from spawning phases.
    static constexpr double kMassFloor = 64 * DBL_EPSILON;

    double remaining_supply() const {
        double s = 0.0;
        for (double v : supply_) s += v > kMassFloor ? v : 0.0;
        return s;
    }
    double remaining_demand() const {
        double s = 0.0;
        for (double v : demand_) s += v > kMassFloor ? v : 0.0;
        return s;
    }

    // Reduced cost of source i -> sink j (forward) is C_ij + pi_i - pi_j; the reverse arc
    // sink j -> source i exists while flow_ij > 0 with reduced cost -C_ij + pi_j - pi_i.
    std::size_t shortest_path() {
        const std::size_t nodes = n_ + m_;
        std::fill(dist_.begin(), dist_.end(), kInf);
        std::fill(pred_.begin(), pred_.end(), kNone);
        std::fill(settled_.begin(), settled_.end(), false);
        for (std::size_t i = 0; i < n_; ++i)
            if (supply_[i] > kMassFloor) dist_[i] = 0.0;

        for (;;) {
            std::size_t u = kNone;
            double best = kInf;
            for (std::size_t v = 0; v < nodes; ++v)
                if (!settled_[v] && dist_[v] < best) {
                    best = dist_[v];
                    u = v;
                }
            if (u == kNone) return kNone;
            settled_[u] = true;

            if (u >= n_) {
                const std::size_t j = u - n_;
                if (demand_[j] > kMassFloor) {
                    update_potentials(best);
                    return u;
                }
                for (std::size_t i = 0; i < n_; ++i) {
                    if (settled_[i] || flow_(i, j) <= 0.0) continue;
                    const double rc = std::max(0.0, -cost_(i, j) + potential_[u] - potential_[i]);
                    if (best + rc < dist_[i]) {
                        dist_[i] = best + rc;
                        pred_[i] = u;
                    }
                }
            } else {
                for (std::size_t j = 0; j < m_; ++j) {
                    const std::size_t v = n_ + j;
                    if (settled_[v]) continue;
                    const double rc = std::max(0.0, cost_(u, j) + potential_[u] - potential_[v]);
                    if (best + rc < dist_[v]) {
                        dist_[v] = best + rc;
                        pred_[v] = u;
                    }
                }
            }
        }
    }

    void update_potentials(double target_dist) {
        for (std::size_t v = 0; v < n_ + m_; ++v) potential_[v] += std::min(dist_[v], target_dist);
    }

    void augment(std::size_t sink) {
        const std::size_t j_end = sink - n_;
        double delta = demand_[j_end];
        std::size_t v = sink;
        while (pred_[v] != kNone) {
            const std::size_t u = pred_[v];
            if (u >= n_) delta = std::min(delta, flow_(v, u - n_)); // reverse arc sink u -> source v
            v = u;
        }
        delta = std::min(delta, supply_[v]);

        demand_[j_end] -= delta;
        supply_[v] -= delta;
        v = sink;
        while (pred_[v] != kNone) {
            const std::size_t u = pred_[v];
            if (u < n_) {
                flow_(u, v - n_) += delta;
            } else {
                double& f = flow_(v, u - n_);
                f -= delta;
                if (f <= kMassFloor) f = 0.0;
            }
            v = u;
        }
    }

    std::size_t n_, m_;
    const Matrix& cost_;
    Matrix flow_;
    std::vector<double> supply_, demand_, potential_, dist_;
    std::vector<std::size_t> pred_;
    std::vector<bool> settled_;
    std::size_t phases_ = 0;
};

} // namespace

TransportPlan solve_exact(std::span<const double> a, std::span<const double> b, const CostMatrix& C) {
    detail::require(a.size() == C.rows() && b.size() == C.cols(), "solve_exact: marginal lengths do not match cost shape");
    detail::require(!a.empty() && !b.empty(), "solve_exact: empty marginals");
    check_simplex(a, "solve_exact row marginal");
    check_simplex(b, "solve_exact column marginal");

    FlowSolver solver(a, b, C.entries);
    solver.run();

    TransportPlan plan;
    plan.coupling = solver.take_flow();
    plan.row_marginal.assign(a.begin(), a.end());
    plan.col_marginal.assign(b.begin(), b.end());
    plan.objective = frobenius(plan.coupling, C.entries);
    plan.marginal_violation = marginal_violation(plan.coupling, a, b);
    plan.info.method = SolverMethod::exact;
    plan.info.iterations = solver.phases();
    // Marginals that are each on the simplex within tolerance may still disagree in total mass.
    double imbalance = 0.0;
    for (double v : a) imbalance += v;
    for (double v : b) imbalance -= v;
    if (plan.marginal_violation > 1e-9 + std::abs(imbalance)) {
        std::ostringstream os;
        os << "solve_exact: marginal violation " << plan.marginal_violation << " after " << solver.phases()
           << " augmentations";
        throw NumericalError(os.str());
    }
    return plan;
}

} // namespace hotda
