#include "hotda/pipeline.hpp"

#include "hotda/error.hpp"
#include "hotda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hotda {

Matching match_structures(const MeasureOfMeasures& phi_s, const MeasureOfMeasures& phi_t, const MatchOptions& options) {
    detail::require(options.p >= 1.0, "match_structures: order p must be >= 1");
    detail::require(options.tie_tolerance >= 0.0, "match_structures: tie tolerance must be >= 0");
    Matching m;
    m.cost = inner_cost_matrix(phi_s, phi_t, options.p, options.inner);
    m.epsilon = options.epsilon > 0.0 ? options.epsilon : auto_epsilon(m.cost);

    SinkhornOptions opt;
    opt.epsilon = m.epsilon;
    m.outer_plan = solve_sinkhorn(phi_s.weights(), phi_t.weights(), CostMatrix(m.cost, options.p), opt);

    const Matrix& plan = m.outer_plan.coupling;
    std::vector<std::size_t> hits(plan.cols(), 0);
    for (std::size_t h = 0; h < plan.rows(); ++h) {
        const auto row = plan.row(h);
        const double top = kernels::max(row);
        const double cut = top - options.tie_tolerance * std::abs(top);
        std::size_t chosen = row.size(), count = 0;
        for (std::size_t l = 0; l < row.size(); ++l)
            if (row[l] >= cut) {
                if (chosen == row.size()) chosen = l;
                ++count;
            }
        m.sigma.push_back(chosen);
        if (count > 1) m.tie_rows.push_back(h);
        ++hits[chosen];
    }
    for (std::size_t l = 0; l < hits.size(); ++l)
        if (hits[l] > 1) m.collisions.push_back(l);
    return m;
}

Matrix barycentric_transport(const DiscreteMeasure& source, const DiscreteMeasure& target, double epsilon_prime) {
    const CostMatrix C = squared_euclidean_cost(source, target);
    SinkhornOptions opt;
    opt.epsilon = epsilon_prime > 0.0 ? epsilon_prime : auto_epsilon(C.entries);
    const TransportPlan plan = solve_sinkhorn(source.weights(), target.weights(), C, opt);

    const std::size_t d = target.dim();
    std::vector<double> lo(d), hi(d);
    for (std::size_t k = 0; k < d; ++k) {
        lo[k] = hi[k] = target.support()(0, k);
        for (std::size_t j = 1; j < target.size(); ++j) {
            lo[k] = std::min(lo[k], target.support()(j, k));
            hi[k] = std::max(hi[k], target.support()(j, k));
        }
    }

    Matrix out(source.size(), d, 0.0);
    for (std::size_t i = 0; i < source.size(); ++i) {
        const auto row = plan.coupling.row(i);
        const double mass = kernels::sum(row);
        if (!(mass > 0.0)) {
            std::ostringstream os;
            os << "barycentric_transport: source point " << i << " received no mass (epsilon " << opt.epsilon << ")";
            throw NumericalError(os.str());
        }
        for (std::size_t j = 0; j < target.size(); ++j)
            if (row[j] != 0.0) kernels::axpy(row[j] / mass, target.point(j), out.row(i));
        // The exact image is a convex combination; clamp away rounding outside the hull's box.
        for (std::size_t k = 0; k < d; ++k) out(i, k) = std::clamp(out(i, k), lo[k], hi[k]);
    }
    return out;
}

AdaptResult adapt(const LabeledDataset& s, const UnlabeledDataset& t, const AdaptConfig& config) {
    s.validate();
    detail::require(s.dim() == t.dim(), "adapt: source and target dimensions differ");

    StructureDecomposition src = classes_from_labels(s, config.outer_weights);
    KMeansOptions km;
    km.k = config.k ? config.k : s.num_classes();
    km.seed = config.seed;
    km.restarts = config.restarts;
    km.initial_centers = config.initial_centers;
    StructureDecomposition tgt = clusters_kmeans(t, km, config.outer_weights);

    Matching matching = match_structures(src.structures, tgt.structures, config.match);

    TransportedDataset out;
    out.points = Matrix(s.size(), s.dim());
    out.labels = s.labels;
    out.class_names = s.class_names;
    out.provenance.resize(s.size());
    for (std::size_t h = 0; h < src.structures.size(); ++h) {
        const std::size_t l = matching.sigma[h];
        const Matrix moved = barycentric_transport(src.structures.atom(h), tgt.structures.atom(l), config.epsilon_prime);
        const auto rows = src.members(h);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::copy(moved.row(r).begin(), moved.row(r).end(), out.points.row(rows[r]).begin());
            out.provenance[rows[r]] = {h, l};
        }
    }
    return AdaptResult{std::move(out), std::move(matching), std::move(src), std::move(tgt)};
}

NearestNeighbor adapted_classifier(const AdaptResult& result) {
    return NearestNeighbor(result.transported.points, result.transported.labels, "adapted-1nn");
}

} // namespace hotda
