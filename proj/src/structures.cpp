#include "hotda/structures.hpp"

#include "hotda/error.hpp"
#include "hotda/kernels.hpp"
#include "hotda/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace hotda {

void LabeledDataset::validate() const {
    detail::require(points.rows() == labels.size(), "LabeledDataset: points and labels differ in length");
    for (int l : labels)
        detail::require(l >= 0 && static_cast<std::size_t>(l) < class_names.size(), "LabeledDataset: label out of range");
}

namespace {

std::optional<long long> parse_integer(const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return v;
}

} // namespace

std::vector<std::string> order_class_names(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    const bool numeric = std::all_of(names.begin(), names.end(), [](const std::string& s) { return parse_integer(s).has_value(); });
    if (numeric)
        std::stable_sort(names.begin(), names.end(),
                         [](const std::string& l, const std::string& r) { return *parse_integer(l) < *parse_integer(r); });
    return names;
}

LabeledDataset make_labeled(Matrix points, const std::vector<std::string>& raw_labels) {
    detail::require(points.rows() == raw_labels.size(), "make_labeled: points and labels differ in length");
    std::vector<std::string> names = order_class_names(raw_labels);

    std::map<std::string, int> index;
    for (std::size_t c = 0; c < names.size(); ++c) index[names[c]] = static_cast<int>(c);
    LabeledDataset s{std::move(points), {}, std::move(names)};
    s.labels.reserve(raw_labels.size());
    for (const auto& l : raw_labels) s.labels.push_back(index.at(l));
    return s;
}

LabeledDataset make_labeled(Matrix points, std::vector<int> labels, std::size_t num_classes) {
    LabeledDataset s{std::move(points), std::move(labels), {}};
    for (std::size_t c = 0; c < num_classes; ++c) s.class_names.push_back(std::to_string(c));
    s.validate();
    return s;
}

LabeledDataset with_classes(const LabeledDataset& s, const std::vector<std::string>& class_names) {
    s.validate();
    std::map<std::string, int> index;
    for (std::size_t c = 0; c < class_names.size(); ++c) index[class_names[c]] = static_cast<int>(c);
    LabeledDataset out{s.points, {}, class_names};
    out.labels.reserve(s.size());
    for (int l : s.labels) {
        const auto it = index.find(s.class_names[static_cast<std::size_t>(l)]);
        if (it == index.end()) detail::reject("label '" + s.class_names[static_cast<std::size_t>(l)] + "' is not a known class");
        out.labels.push_back(it->second);
    }
    return out;
}

UnlabeledDataset drop_labels(const LabeledDataset& s) { return UnlabeledDataset{s.points}; }

std::vector<std::size_t> StructureDecomposition::members(std::size_t h) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < membership.size(); ++i)
        if (membership[i] == h) out.push_back(i);
    return out;
}

StructureDecomposition structures_from_membership(const Matrix& points, const std::vector<std::size_t>& membership,
                                                  std::size_t k, StructureKind kind, OuterWeights weights) {
    detail::require(points.rows() == membership.size(), "structures: membership length mismatch");
    detail::require(k >= 1, "structures: k must be >= 1");
    std::vector<Matrix> member_points(k);
    for (std::size_t i = 0; i < membership.size(); ++i) {
        detail::require(membership[i] < k, "structures: membership index out of range");
        member_points[membership[i]].push_row(points.row(i));
    }

    std::vector<DiscreteMeasure> atoms;
    std::vector<double> outer;
    double inertia = 0.0;
    const double n = static_cast<double>(points.rows());
    for (std::size_t h = 0; h < k; ++h) {
        const Matrix& pts = member_points[h];
        if (pts.rows() == 0) detail::reject("structures: structure " + std::to_string(h) + " is empty");
        std::vector<double> mean(pts.cols(), 0.0);
        for (std::size_t i = 0; i < pts.rows(); ++i) kernels::axpy(1.0 / static_cast<double>(pts.rows()), pts.row(i), mean);
        for (std::size_t i = 0; i < pts.rows(); ++i)
            for (std::size_t c = 0; c < pts.cols(); ++c) inertia += (pts(i, c) - mean[c]) * (pts(i, c) - mean[c]);
        outer.push_back(weights == OuterWeights::uniform ? 1.0 / static_cast<double>(k)
                                                         : static_cast<double>(pts.rows()) / n);
        atoms.push_back(DiscreteMeasure::uniform(pts));
    }
    return StructureDecomposition{MeasureOfMeasures(std::move(atoms), std::move(outer)), membership, kind, inertia};
}

StructureDecomposition classes_from_labels(const LabeledDataset& s, OuterWeights weights) {
    s.validate();
    detail::require(s.num_classes() >= 1, "classes_from_labels: no classes");
    std::vector<std::size_t> counts(s.num_classes(), 0);
    for (int l : s.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0) detail::reject("classes_from_labels: class '" + s.class_names[c] + "' has no points");
    std::vector<std::size_t> membership(s.labels.begin(), s.labels.end());
    return structures_from_membership(s.points, membership, s.num_classes(), StructureKind::class_based, weights);
}

Matrix class_means(const LabeledDataset& s) {
    s.validate();
    Matrix means(s.num_classes(), s.dim(), 0.0);
    std::vector<double> counts(s.num_classes(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        kernels::axpy(1.0, s.points.row(i), means.row(static_cast<std::size_t>(s.labels[i])));
        counts[static_cast<std::size_t>(s.labels[i])] += 1.0;
    }
    for (std::size_t c = 0; c < s.num_classes(); ++c) {
        detail::require(counts[c] > 0.0, "class_means: class '" + s.class_names[c] + "' has no points");
        for (double& v : means.row(c)) v /= counts[c];
    }
    return means;
}

namespace {

struct LloydRun {
    Matrix centers;
    std::vector<std::size_t> membership;
    double inertia = 0.0;
    std::vector<double> trace;
    std::size_t iterations = 0;
};

Matrix seed_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t m = x.rows();
    Matrix centers;
    centers.push_row(x.row(rng.below(m)));
    std::vector<double> d2(m, std::numeric_limits<double>::infinity()), fresh(1);
    while (centers.rows() < k) {
        const std::size_t last = centers.rows() - 1;
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            kernels::squared_distances(x.row(i), centers.row(last), 1, fresh);
            d2[i] = std::min(d2[i], fresh[0]);
            total += d2[i];
        }
        std::size_t pick = m - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                cum += d2[i];
                if (cum > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(m);
        }
        centers.push_row(x.row(pick));
    }
    return centers;
}

void recompute_centers(const Matrix& x, const std::vector<std::size_t>& membership, Matrix& centers) {
    const std::size_t k = centers.rows();
    std::vector<double> counts(k, 0.0);
    Matrix sums(k, x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        kernels::axpy(1.0, x.row(i), sums.row(membership[i]));
        counts[membership[i]] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0.0) continue;
        for (std::size_t d = 0; d < x.cols(); ++d) centers(c, d) = sums(c, d) / counts[c];
    }
}

LloydRun lloyd(const Matrix& x, Matrix centers, std::size_t max_iter) {
    const std::size_t m = x.rows(), k = centers.rows();
    LloydRun run;
    std::vector<std::size_t> membership(m, k), next(m);
    std::vector<double> dist(m), scratch(k);
    for (std::size_t it = 0; it < std::max<std::size_t>(max_iter, 1); ++it) {
        const Matrix ct = centers.transposed();
        for (std::size_t i = 0; i < m; ++i) {
            kernels::squared_distances(x.row(i), ct.data(), k, scratch);
            const auto best = std::min_element(scratch.begin(), scratch.end());
            next[i] = static_cast<std::size_t>(best - scratch.begin());
            dist[i] = *best;
        }

        // Empty-cluster repair: the worst-served point becomes its own center.
        for (;;) {
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t c : next) ++counts[c];
            const auto empty = std::find(counts.begin(), counts.end(), 0);
            if (empty == counts.end()) break;
            const std::size_t far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
            if (dist[far] <= 0.0) throw NumericalError("kmeans: cannot repair empty cluster (fewer distinct points than k)");
            const std::size_t c = static_cast<std::size_t>(empty - counts.begin());
            for (std::size_t d = 0; d < x.cols(); ++d) centers(c, d) = x(far, d);
            next[far] = c;
            dist[far] = 0.0;
        }

        double inertia = 0.0;
        for (double v : dist) inertia += v;
        if (!run.trace.empty() && inertia > run.trace.back() * (1.0 + 1e-12) + 1e-12) {
            std::ostringstream os;
            os << "kmeans: inertia increased from " << run.trace.back() << " to " << inertia << " at iteration " << it;
            throw NumericalError(os.str());
        }
        run.trace.push_back(inertia);
        run.iterations = it + 1;

        const bool changed = next != membership;
        membership = next;
        recompute_centers(x, membership, centers);
        if (!changed) break;
    }

    run.inertia = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t d = 0; d < x.cols(); ++d) run.inertia += (x(i, d) - centers(membership[i], d)) * (x(i, d) - centers(membership[i], d));
    run.centers = std::move(centers);
    run.membership = std::move(membership);
    return run;
}

// Renumbers clusters by first appearance in row order.
void canonicalize(LloydRun& run) {
    const std::size_t k = run.centers.rows();
    std::vector<std::size_t> relabel(k, k);
    std::size_t next = 0;
    for (std::size_t c : run.membership)
        if (relabel[c] == k) relabel[c] = next++;
    for (std::size_t c = 0; c < k; ++c)
        if (relabel[c] == k) relabel[c] = next++;
    Matrix centers(k, run.centers.cols());
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < centers.cols(); ++d) centers(relabel[c], d) = run.centers(c, d);
    run.centers = std::move(centers);
    for (auto& c : run.membership) c = relabel[c];
}

} // namespace

KMeansResult kmeans(const Matrix& points, const KMeansOptions& opt) {
    detail::require(opt.k >= 1, "kmeans: k must be >= 1");
    detail::require(points.rows() >= opt.k, "kmeans: fewer points than clusters");
    detail::require(points.cols() >= 1, "kmeans: points must have dimension >= 1");
    if (DiscreteMeasure::uniform(points).merged().size() < opt.k)
        detail::reject("kmeans: fewer than k distinct points");

    std::optional<LloydRun> best;
    std::size_t best_restart = 0;
    if (opt.initial_centers) {
        detail::require(opt.initial_centers->rows() == opt.k && opt.initial_centers->cols() == points.cols(),
                        "kmeans: initial centers must be k x d");
        best = lloyd(points, *opt.initial_centers, opt.max_iter);
    } else {
        const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);
        for (std::size_t r = 0; r < restarts; ++r) {
            Rng rng(opt.seed, r);
            LloydRun run = lloyd(points, seed_plus_plus(points, opt.k, rng), opt.max_iter);
            if (!best || run.inertia < best->inertia) {
                best = std::move(run);
                best_restart = r;
            }
        }
    }
    canonicalize(*best);
    return KMeansResult{std::move(best->centers), std::move(best->membership), best->inertia, std::move(best->trace),
                        best->iterations, best_restart};
}

StructureDecomposition clusters_kmeans(const UnlabeledDataset& t, const KMeansOptions& options, OuterWeights weights) {
    const KMeansResult km = kmeans(t.points, options);
    auto sd = structures_from_membership(t.points, km.membership, options.k, StructureKind::cluster_based, weights);
    return sd;
}

StructureDecomposition clusters_kmeans(const UnlabeledDataset& t, std::size_t k, std::uint64_t seed, std::size_t restarts,
                                       OuterWeights weights) {
    KMeansOptions opt;
    opt.k = k;
    opt.seed = seed;
    opt.restarts = restarts;
    return clusters_kmeans(t, opt, weights);
}

} // namespace hotda
