#include "hotda/error.hpp"
#include "hotda/kernels.hpp"
#include "hotda/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hotda {

void check_simplex(std::span<const double> w, const char* what) {
    double total = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0) detail::reject(std::string(what) + ": weights must be finite and non-negative");
        total += x;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
        detail::reject(std::string(what) + ": weights sum to " + std::to_string(total) + ", expected 1");
}

DiscreteMeasure::DiscreteMeasure(Matrix support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    detail::require(support_.rows() >= 1, "DiscreteMeasure: empty support");
    detail::require(support_.cols() >= 1, "DiscreteMeasure: points must have dimension >= 1");
    detail::require(support_.rows() == weights_.size(), "DiscreteMeasure: support and weights differ in length");
    for (double v : support_.data()) detail::require(std::isfinite(v), "DiscreteMeasure: non-finite coordinate");
    check_simplex(weights_, "DiscreteMeasure");
}

DiscreteMeasure DiscreteMeasure::uniform(Matrix support) {
    const std::size_t n = support.rows();
    detail::require(n >= 1, "DiscreteMeasure::uniform: empty support");
    return DiscreteMeasure(std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::dirac(std::span<const double> point) {
    Matrix s;
    s.push_row(point);
    return DiscreteMeasure(std::move(s), {1.0});
}

namespace {

double euclidean(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(acc);
}

// group[i] = representative index (smallest original index of its cluster of near-duplicates).
std::vector<std::size_t> duplicate_groups(const Matrix& pts, double tol) {
    const std::size_t n = pts.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return pts(l, 0) < pts(r, 0); });

    std::vector<std::size_t> group(n);
    std::vector<std::size_t> reps; // sorted by first coordinate
    for (std::size_t idx : order) {
        std::size_t found = n;
        for (std::size_t r = reps.size(); r-- > 0;) {
            const std::size_t rep = reps[r];
            if (pts(rep, 0) < pts(idx, 0) - tol) break;
            if (euclidean(pts.row(rep), pts.row(idx)) <= tol) {
                found = rep;
                break;
            }
        }
        if (found == n) {
            reps.push_back(idx);
            group[idx] = idx;
        } else {
            group[idx] = found;
        }
    }
    // Re-root each cluster at its smallest original index.
    std::vector<std::size_t> root(n, n);
    for (std::size_t i = 0; i < n; ++i) root[group[i]] = std::min(root[group[i]], i);
    for (std::size_t i = 0; i < n; ++i) group[i] = root[group[i]];
    return group;
}

} // namespace

DiscreteMeasure DiscreteMeasure::merged(double tol) const {
    const std::size_t n = size();
    const auto group = duplicate_groups(support_, tol);
    std::vector<double> mass(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) mass[group[i]] += weights_[i];

    Matrix pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
        if (group[i] != i || mass[i] <= 0.0) continue;
        pts.push_row(support_.row(i));
        w.push_back(mass[i]);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

bool same_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double weight_tol, double point_tol) {
    if (mu.dim() != nu.dim()) return false;
    const DiscreteMeasure a = mu.merged(point_tol);
    const DiscreteMeasure b = nu.merged(point_tol);
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool matched = false;
        for (std::size_t j = 0; j < b.size() && !matched; ++j) {
            if (used[j] || euclidean(a.point(i), b.point(j)) > point_tol) continue;
            if (std::abs(a.weights()[i] - b.weights()[j]) > weight_tol) return false;
            used[j] = matched = true;
        }
        if (!matched) return false;
    }
    return true;
}

CostMatrix::CostMatrix(Matrix e, double order, GroundMetric metric)
    : entries(std::move(e)), metric_order(order), ground_metric(metric) {
    detail::require(metric_order >= 1.0, "CostMatrix: metric order must be >= 1");
    for (double v : entries.data())
        detail::require(std::isfinite(v) && v >= 0.0, "CostMatrix: entries must be finite and non-negative");
}

namespace {

Matrix squared_distance_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim() != nu.dim())
        detail::reject("cost_matrix: dimension mismatch (" + std::to_string(mu.dim()) + " vs " + std::to_string(nu.dim()) + ")");
    const Matrix yt = nu.support().transposed();
    Matrix out(mu.size(), nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) kernels::squared_distances(mu.point(i), yt.data(), nu.size(), out.row(i));
    return out;
}

} // namespace

CostMatrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
    detail::require(p >= 1.0 && std::isfinite(p), "cost_matrix: order p must be >= 1");
    Matrix sq = squared_distance_matrix(mu, nu);
    if (p != 2.0) {
        for (double& v : sq.data()) {
            const double d = std::sqrt(v);
            v = (p == 1.0) ? d : std::pow(d, p);
        }
    }
    return CostMatrix(std::move(sq), p, GroundMetric::euclidean);
}

CostMatrix squared_euclidean_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    return CostMatrix(squared_distance_matrix(mu, nu), 1.0, GroundMetric::squared_euclidean);
}

double frobenius(const Matrix& coupling, const Matrix& cost) {
    detail::require(coupling.rows() == cost.rows() && coupling.cols() == cost.cols(), "frobenius: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < coupling.rows(); ++i) acc += kernels::dot(coupling.row(i), cost.row(i));
    return acc;
}

double marginal_violation(const Matrix& coupling, std::span<const double> a, std::span<const double> b) {
    detail::require(coupling.rows() == a.size() && coupling.cols() == b.size(), "marginal_violation: shape mismatch");
    std::vector<double> cols(b.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < coupling.rows(); ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < coupling.cols(); ++j) {
            r += coupling(i, j);
            cols[j] += coupling(i, j);
        }
        total += std::abs(r - a[i]);
    }
    for (std::size_t j = 0; j < b.size(); ++j) total += std::abs(cols[j] - b[j]);
    return total;
}

double entropy(const Matrix& coupling) {
    double h = 0.0;
    for (double g : coupling.data())
        if (g > 0.0) h -= g * (std::log(g) - 1.0);
    return h;
}

double median_entry(const Matrix& m) {
    detail::require(!m.empty(), "median_entry: empty matrix");
    std::vector<double> v(m.data().begin(), m.data().end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

std::string to_string(SolverMethod m) {
    switch (m) {
    case SolverMethod::exact: return "exact";
    case SolverMethod::sinkhorn: return "sinkhorn";
    case SolverMethod::sinkhorn_log: return "sinkhorn-log";
    }
    return "unknown";
}

} // namespace hotda
