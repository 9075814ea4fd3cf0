#include "hotda/error.hpp"
#include "hotda/kernels.hpp"
#include "hotda/ot_core.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace hotda {
namespace {

constexpr double kScalingCeiling = 1e300;
constexpr double kScalingFloor = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RawSolution {
    Matrix coupling;
    std::size_t iterations = 0;
    bool converged = false;
    double violation = 0.0;
    SolverMethod method = SolverMethod::sinkhorn;
};

// Column count up to which the Newton polish is used (one dense m x m factorization per step).
constexpr std::size_t kNewtonMaxColumns = 512;

bool scaling_ok(double x, double target) {
    if (target == 0.0) return x == 0.0;
    return std::isfinite(x) && x <= kScalingCeiling && x >= kScalingFloor;
}

// Plain Sinkhorn-Knopp on K = exp(-C / eps). Returns nullopt when the kernel underflows or a
// scaling factor leaves the representable range, in which case the caller switches domains.
// When the log-domain solver can finish with Newton steps, a stalled run (less than a halving
// of the violation over 100 sweeps) also stops early and comes back unconverged.
std::optional<RawSolution> scaling_solve(std::span<const double> a, std::span<const double> b, const Matrix& C,
                                         const SinkhornOptions& opt) {
    const std::size_t n = a.size(), m = b.size();
    Matrix K(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double k = std::exp(-C(i, j) / opt.epsilon);
            if (!(k >= kScalingFloor)) return std::nullopt;
            K(i, j) = k;
        }

    std::vector<double> u(n, 1.0), v(m), Kv(n), KTu(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = b[j] > 0.0 ? 1.0 : 0.0;

    const bool can_polish = m <= kNewtonMaxColumns;
    double checkpoint = std::numeric_limits<double>::infinity();
    RawSolution out;
    std::size_t it = 0;
    for (; it < opt.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) Kv[i] = kernels::dot(K.row(i), v);
        if (it > 0) {
            // Columns are exact after the v-update; the row error is the full violation.
            double viol = 0.0;
            for (std::size_t i = 0; i < n; ++i) viol += std::abs(u[i] * Kv[i] - a[i]);
            out.violation = viol;
            if (viol <= opt.tol) {
                out.converged = true;
                break;
            }
            if (can_polish && it % 100 == 0) {
                if (viol > 0.5 * checkpoint) break;
                checkpoint = viol;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = a[i] > 0.0 ? a[i] / Kv[i] : 0.0;
            if (!scaling_ok(u[i], a[i])) return std::nullopt;
        }
        std::fill(KTu.begin(), KTu.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (u[i] != 0.0) kernels::axpy(u[i], K.row(i), KTu);
        for (std::size_t j = 0; j < m; ++j) {
            v[j] = b[j] > 0.0 ? b[j] / KTu[j] : 0.0;
            if (!scaling_ok(v[j], b[j])) return std::nullopt;
        }
    }
    out.iterations = it;

    out.coupling = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.coupling(i, j) = u[i] * K(i, j) * v[j];
    if (!out.converged) out.violation = marginal_violation(out.coupling, a, b);
    return out;
}

// log sum_j exp(t_j), with t_j = (pot_j - cost_j) / eps. `scratch` has the row length.
double log_sum_exp(std::span<const double> pot, std::span<const double> cost, double inv_eps,
                   std::span<double> scratch) {
    for (std::size_t j = 0; j < pot.size(); ++j) scratch[j] = pot[j] * inv_eps;
    kernels::axpy(-inv_eps, cost, scratch);
    const double mx = kernels::max(scratch);
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (double t : scratch) s += std::exp(t - mx);
    return mx + std::log(s);
}

Matrix log_coupling(std::span<const double> a, std::span<const double> b, const Matrix& C, std::span<const double> f,
                    std::span<const double> g, double eps) {
    const double inv_eps = 1.0 / eps;
    Matrix P(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            P(i, j) = (a[i] == 0.0 || b[j] == 0.0) ? 0.0 : std::exp((f[i] + g[j] - C(i, j)) * inv_eps);
    return P;
}

// Semi-dual state: for column potentials g the row potentials are solved exactly,
// f_i = eps (log a_i - LSE_j((g_j - C_ij) / eps)), so every row sum is a_i and only the
// column sums can be off.
struct SemiDual {
    std::vector<double> f;
    Matrix P;
    std::vector<double> col;
    double violation = 0.0;
    /// sum_i a_i f_i + sum_j b_j g_j, which Newton maximizes.
    double objective = 0.0;
};

SemiDual evaluate_semi_dual(std::span<const double> a, std::span<const double> b, const Matrix& C,
                            std::span<const double> log_a, std::span<const double> g, double eps) {
    const std::size_t n = a.size(), m = b.size();
    const double inv_eps = 1.0 / eps;
    SemiDual s{std::vector<double>(n, kNegInf), Matrix(n, m, 0.0), std::vector<double>(m, 0.0), 0.0};
    std::vector<double> scratch(m);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] == 0.0) continue;
        s.f[i] = eps * (log_a[i] - log_sum_exp(g, C.row(i), inv_eps, scratch));
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (b[j] == 0.0) continue;
            s.P(i, j) = std::exp((s.f[i] + g[j] - C(i, j)) * inv_eps);
            row += s.P(i, j);
        }
        s.violation += std::abs(row - a[i]);
        s.objective += a[i] * s.f[i];
        kernels::axpy(1.0, s.P.row(i), s.col);
    }
    for (std::size_t j = 0; j < m; ++j) {
        s.violation += std::abs(s.col[j] - b[j]);
        if (b[j] > 0.0) s.objective += b[j] * g[j];
    }
    return s;
}

// Newton's method on the semi-dual objective sum_i a_i f_i(g) + sum_j b_j g_j. Its Hessian
// is -(diag(c) - P^T diag(1/a) P) / eps with c the column sums; one column is pinned to
// remove the constant-shift null direction. A step is accepted when it lowers the marginal
// violation or passes an Armijo test on the objective; the latter keeps progress measurable
// while mass is still being pushed across a weak link and the violation sits on a plateau.
//
// Sinkhorn's contraction degrades to 1 - O(smallest link between blocks of the plan) as
// epsilon shrinks; Newton resolves that slow mode in a handful of steps.
bool newton_polish(std::span<const double> a, std::span<const double> b, const Matrix& C,
                   std::span<const double> log_a, std::vector<double>& g, double eps, double tol, std::size_t budget,
                   std::size_t& used, double& violation) {
    const std::size_t m = b.size();
    std::vector<std::size_t> free;
    std::size_t pinned = m;
    for (std::size_t j = 0; j < m; ++j)
        if (b[j] > 0.0 && (pinned == m || b[j] > b[pinned])) pinned = j;
    for (std::size_t j = 0; j < m; ++j)
        if (b[j] > 0.0 && j != pinned) free.push_back(j);
    const std::size_t q = free.size();

    SemiDual s = evaluate_semi_dual(a, b, C, log_a, g, eps);
    violation = s.violation;
    for (std::size_t step = 0; step < budget; ++step) {
        if (violation <= tol) return true;
        if (q == 0) return false;
        // Rows scaled by 1/sqrt(a_i) so that M = diag(c) - Q^T Q.
        Eigen::MatrixXd Q(a.size(), q);
        Eigen::VectorXd col(q), residual(q);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double scale = a[i] > 0.0 ? 1.0 / std::sqrt(a[i]) : 0.0;
            for (std::size_t x = 0; x < q; ++x) Q(i, x) = scale * s.P(i, free[x]);
        }
        for (std::size_t x = 0; x < q; ++x) {
            col[x] = s.col[free[x]];
            residual[x] = b[free[x]] - col[x];
        }
        Eigen::MatrixXd M = -Q.transpose() * Q;
        M.diagonal() += col;

        Eigen::VectorXd delta;
        bool factored = false;
        // Tiny Levenberg damping when rounding leaves M numerically indefinite.
        for (double damping = 0.0; !factored && damping < 1.0; damping = damping == 0.0 ? 1e-14 : damping * 100.0) {
            Eigen::MatrixXd damped = M;
            damped.diagonal() += damping * (col.array() + 1e-300).matrix();
            const Eigen::LLT<Eigen::MatrixXd> llt(damped);
            if (llt.info() == Eigen::Success) {
                delta = llt.solve(eps * residual);
                factored = delta.allFinite();
            }
        }
        if (!factored) return false;

        // Across a weak link between blocks of the plan the linear model overshoots by orders
        // of magnitude; moving a potential by 20 eps already rescales entries by e^20.
        const double longest = delta.cwiseAbs().maxCoeff();
        const double cap = longest > 20.0 * eps ? 20.0 * eps / longest : 1.0;
        const double slope = residual.dot(delta);
        bool improved = false;
        for (double t = cap; t > 1e-12 * cap; t *= 0.5) {
            std::vector<double> trial(g);
            for (std::size_t x = 0; x < q; ++x) trial[free[x]] += t * delta[x];
            SemiDual next = evaluate_semi_dual(a, b, C, log_a, trial, eps);
            if (next.violation < violation || next.objective > s.objective + 1e-4 * t * slope) {
                g = std::move(trial);
                s = std::move(next);
                violation = s.violation;
                improved = true;
                break;
            }
        }
        ++used;
        if (!improved) return violation <= tol;
    }
    return violation <= tol;
}

// Stabilized Sinkhorn on dual potentials (f, g), with epsilon annealed geometrically from the
// cost scale down to the target so each stage starts from a good warm start. The final
// stage hands over to a Newton polish once plain iterations stop making quick progress.
RawSolution log_solve(std::span<const double> a, std::span<const double> b, const Matrix& C,
                      const SinkhornOptions& opt) {
    const std::size_t n = a.size(), m = b.size();
    const Matrix Ct = C.transposed();
    double cmax = 0.0;
    for (double v : C.data()) cmax = std::max(cmax, v);

    std::vector<double> log_a(n), log_b(m);
    for (std::size_t i = 0; i < n; ++i) log_a[i] = a[i] > 0.0 ? std::log(a[i]) : kNegInf;
    for (std::size_t j = 0; j < m; ++j) log_b[j] = b[j] > 0.0 ? std::log(b[j]) : kNegInf;

    std::vector<double> f(n, 0.0), g(m, 0.0), row_scratch(m), col_scratch(n);
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] == 0.0) f[i] = kNegInf;
    for (std::size_t j = 0; j < m; ++j)
        if (b[j] == 0.0) g[j] = kNegInf;

    std::vector<double> schedule;
    for (double e = std::max(cmax, opt.epsilon); e > opt.epsilon; e *= 0.5) schedule.push_back(e);
    schedule.push_back(opt.epsilon);

    constexpr std::size_t kStageCap = 200;
    constexpr double kStageTol = 1e-6;
    // Plain sweeps in the final stage before trying Newton, and between retries.
    constexpr std::size_t kNewtonWarmup = 50;

    auto diverged = [](const char* what, std::size_t idx, std::size_t iter, double eps) {
        std::ostringstream os;
        os << "solve_sinkhorn: log-domain potential diverged at " << what << ' ' << idx << ", iteration " << iter
           << ", epsilon " << eps;
        throw NumericalError(os.str());
    };

    RawSolution out;
    out.method = SolverMethod::sinkhorn_log;
    std::size_t used = 0;
    bool polished = false;
    for (std::size_t stage = 0; stage < schedule.size() && !polished; ++stage) {
        const double eps = schedule[stage];
        const double inv_eps = 1.0 / eps;
        const bool last = stage + 1 == schedule.size();
        const double stage_tol = last ? opt.tol : std::max(opt.tol, kStageTol);
        const std::size_t budget =
            last ? (opt.max_iter > used ? opt.max_iter - used : 0) : std::min(kStageCap, opt.max_iter - std::min(opt.max_iter, used));
        const std::size_t stop = used + budget;
        out.converged = false;
        for (std::size_t it = 0; used < stop; ++it, ++used) {
            double viol = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (a[i] == 0.0) continue;
                const double fresh = eps * (log_a[i] - log_sum_exp(g, C.row(i), inv_eps, row_scratch));
                if (!std::isfinite(fresh)) diverged("row", i, used, eps);
                viol += std::abs(a[i] * std::exp((f[i] - fresh) * inv_eps) - a[i]);
                f[i] = fresh;
            }
            if (it > 0 && viol <= stage_tol) {
                out.converged = true;
                out.violation = viol;
                break;
            }
            for (std::size_t j = 0; j < m; ++j) {
                if (b[j] == 0.0) continue;
                const double fresh = eps * (log_b[j] - log_sum_exp(f, Ct.row(j), inv_eps, col_scratch));
                if (!std::isfinite(fresh)) diverged("column", j, used, eps);
                g[j] = fresh;
            }
            if (last && m <= kNewtonMaxColumns && it > 0 && it % kNewtonWarmup == 0) {
                // Accepted Newton steps only ever improve g, so it is kept either way; the next
                // row update recomputes f from it.
                std::size_t newton_used = used + 1;
                double v = 0.0;
                if (newton_polish(a, b, C, log_a, g, eps, opt.tol, stop - newton_used, newton_used, v)) {
                    used = newton_used;
                    out.converged = polished = true;
                    out.violation = v;
                    break;
                }
                used = std::min(stop - 1, newton_used);
            }
        }
        if (last) break;
    }
    out.iterations = used;
    if (polished) {
        SemiDual s = evaluate_semi_dual(a, b, C, log_a, g, opt.epsilon);
        out.coupling = std::move(s.P);
        out.violation = s.violation;
        return out;
    }
    out.coupling = log_coupling(a, b, C, f, g, opt.epsilon);
    if (!out.converged) out.violation = marginal_violation(out.coupling, a, b);
    return out;
}

// Projects an almost-feasible coupling onto U(a, b): shrink rows and columns that carry too
// much mass, then redistribute the deficit as a rank-one correction.
void round_to_polytope(Matrix& P, std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size(), m = b.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = kernels::sum(P.row(i));
        if (r > a[i]) {
            const double s = r > 0.0 ? a[i] / r : 0.0;
            for (double& x : P.row(i)) x *= s;
        }
    }
    std::vector<double> cols(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, P.row(i), cols);
    for (std::size_t j = 0; j < m; ++j) {
        if (cols[j] > b[j]) {
            const double s = cols[j] > 0.0 ? b[j] / cols[j] : 0.0;
            for (std::size_t i = 0; i < n; ++i) P(i, j) *= s;
        }
    }
    std::vector<double> err_r(n), err_c(m, 0.0);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err_r[i] = std::max(0.0, a[i] - kernels::sum(P.row(i)));
        mass += err_r[i];
    }
    std::fill(cols.begin(), cols.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, P.row(i), cols);
    for (std::size_t j = 0; j < m; ++j) err_c[j] = std::max(0.0, b[j] - cols[j]);
    if (mass <= 0.0) return;
    for (std::size_t i = 0; i < n; ++i)
        if (err_r[i] > 0.0) kernels::axpy(err_r[i] / mass, err_c, P.row(i));
}

} // namespace

TransportPlan solve_sinkhorn(std::span<const double> a, std::span<const double> b, const CostMatrix& C,
                             const SinkhornOptions& opt) {
    detail::require(a.size() == C.rows() && b.size() == C.cols(), "solve_sinkhorn: marginal lengths do not match cost shape");
    detail::require(!a.empty() && !b.empty(), "solve_sinkhorn: empty marginals");
    detail::require(std::isfinite(opt.epsilon) && opt.epsilon > 0.0, "solve_sinkhorn: epsilon must be > 0");
    detail::require(opt.tol > 0.0, "solve_sinkhorn: tol must be > 0");
    detail::require(opt.max_iter >= 1, "solve_sinkhorn: max_iter must be >= 1");
    check_simplex(a, "solve_sinkhorn row marginal");
    check_simplex(b, "solve_sinkhorn column marginal");

    std::optional<RawSolution> raw;
    if (!opt.force_log_domain) raw = scaling_solve(a, b, C.entries, opt);
    if (raw && !raw->converged && b.size() <= kNewtonMaxColumns) {
        // The scaling iteration stalled on a slow mode; retry in the log domain, which can
        // finish with Newton steps. Report the combined iteration count.
        RawSolution retry = log_solve(a, b, C.entries, opt);
        if (retry.converged) {
            retry.iterations += raw->iterations;
            raw = std::move(retry);
        }
    }
    if (!raw) raw = log_solve(a, b, C.entries, opt);

    TransportPlan plan;
    plan.coupling = std::move(raw->coupling);
    round_to_polytope(plan.coupling, a, b);
    plan.row_marginal.assign(a.begin(), a.end());
    plan.col_marginal.assign(b.begin(), b.end());
    plan.objective = frobenius(plan.coupling, C.entries);
    plan.marginal_violation = marginal_violation(plan.coupling, a, b);
    plan.info.method = raw->method;
    plan.info.iterations = raw->iterations;
    plan.info.converged = raw->converged;
    plan.info.epsilon = opt.epsilon;
    plan.info.raw_marginal_violation = raw->violation;
    return plan;
}

} // namespace hotda
