#include "hotda/bounds.hpp"

#include "hotda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hotda {

void ConcentrationParams::validate() const {
    detail::require(delta > 0.0 && delta < 1.0, "concentration: delta must lie in (0, 1)");
    detail::require(zeta_prime > 0.0 && std::isfinite(zeta_prime), "concentration: zeta_prime must be a positive finite number");
    detail::require(k >= 1, "concentration: k must be >= 1");
}

double concentration_term(const ConcentrationParams& params) {
    params.validate();
    return 2.0 * std::sqrt(2.0 * std::log(1.0 / params.delta) / (params.zeta_prime * static_cast<double>(params.k)));
}

std::string to_string(BoundKind kind) {
    switch (kind) {
    case BoundKind::unsupervised: return "unsupervised";
    case BoundKind::corollary: return "corollary";
    case BoundKind::semi_supervised: return "semi-supervised";
    case BoundKind::multi_pairwise: return "multi-pairwise";
    case BoundKind::multi_combined: return "multi-combined";
    }
    return "unknown";
}

double BoundReport::value(const std::string& name) const {
    for (const auto* list : {&terms, &components})
        for (const auto& [key, v] : *list)
            if (key == name) return v;
    detail::reject("BoundReport: no term or component named '" + name + "'");
}

bool BoundReport::has_term(const std::string& name) const {
    return std::any_of(terms.begin(), terms.end(), [&](const auto& t) { return t.first == name; });
}

double BoundReport::sum_terms() const {
    double total = 0.0;
    for (const auto& t : terms) total += t.second;
    return total;
}

HypothesisPool default_pool(const LabeledDataset& s, const std::optional<LabeledDataset>& t_labeled) {
    HypothesisPool pool{std::make_shared<NearestNeighbor>(s, "1nn(S)"), std::make_shared<NearestCentroid>(s, "centroid(S)")};
    if (t_labeled && t_labeled->size() > 0) {
        pool.push_back(std::make_shared<NearestNeighbor>(*t_labeled, "1nn(T)"));
        pool.push_back(std::make_shared<NearestCentroid>(*t_labeled, "centroid(T)"));
    }
    return pool;
}

namespace {

void require_same_classes(const LabeledDataset& a, const LabeledDataset& b, const char* what) {
    if (a.class_names != b.class_names)
        detail::reject(std::string(what) + ": source and target label sets must be aligned to the same class list");
}

double risk(const Classifier& h, const LabeledDataset& d, const Loss& loss) { return empirical_risk(h, d, loss).value; }

std::vector<std::string> pool_names(const HypothesisPool& pool) {
    std::vector<std::string> names;
    for (const auto& h : pool) names.push_back(h->name());
    return names;
}

/// Target labels re-indexed to the source class list, when present.
std::optional<LabeledDataset> aligned_target(const TargetSample& t, const std::vector<std::string>& class_names) {
    if (!t.labeled) return std::nullopt;
    detail::require(t.labeled->dim() == t.points.dim(), "bound: labeled target dimension differs from the target sample");
    return with_classes(*t.labeled, class_names);
}

void fill_params(BoundReport& r, const BoundOptions& o, std::size_t k) {
    r.delta = o.delta;
    r.zeta_prime = o.zeta_prime;
    r.K = o.K;
    r.k = k;
    r.seed = o.seed;
}

double best_target_risk(const HypothesisPool& pool, const LabeledDataset& t, const Loss& loss) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : pool) best = std::min(best, risk(*h, t, loss));
    return best;
}

void record_diagnostic(BoundReport& r, const Classifier& h, const std::optional<LabeledDataset>& t, const Loss& loss) {
    detail::require(t.has_value() && t->size() > 0, "bound: the diagnostic needs labeled target data");
    r.lhs_target_risk = risk(h, *t, loss);
    r.satisfied = *r.lhs_target_risk <= r.rhs_total;
}

struct Divergence {
    StructureDecomposition source;
    StructureDecomposition target;
    double hw = 0.0;
};

Divergence divergence(const LabeledDataset& s, const UnlabeledDataset& t, std::size_t k, const BoundOptions& o) {
    detail::require(s.dim() == t.dim(), "bound: source and target dimensions differ");
    Divergence d{classes_from_labels(s), bound_target_structures(t, k, o), 0.0};
    d.hw = hierarchical_wasserstein(d.source.structures, d.target.structures, 1.0).distance;
    return d;
}

std::size_t argmin_index(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

} // namespace

double estimate_lambda(const LabeledDataset& s, const LabeledDataset& t_labeled, const HypothesisPool& pool, const Loss& loss) {
    detail::require(!pool.empty(), "estimate_lambda: empty hypothesis pool");
    require_same_classes(s, t_labeled, "estimate_lambda");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : pool) best = std::min(best, risk(*h, s, loss) + risk(*h, t_labeled, loss));
    return best;
}

double weighted_risk(const Classifier& h, const LabeledDataset& s, const LabeledDataset& t_labeled, double theta, const Loss& loss) {
    detail::require(theta >= 0.0 && theta <= 1.0, "weighted_risk: theta must lie in [0, 1]");
    const double source = theta < 1.0 ? risk(h, s, loss) : 0.0;
    if (theta == 0.0) return source;
    detail::require(t_labeled.size() > 0, "weighted_risk: theta > 0 needs labeled target points");
    const double target = risk(h, t_labeled, loss);
    if (theta == 1.0) return target;
    return theta * target + (1.0 - theta) * source;
}

StructureDecomposition bound_target_structures(const UnlabeledDataset& t, std::size_t k, const BoundOptions& options) {
    KMeansOptions km;
    km.k = k;
    km.seed = options.seed;
    km.restarts = options.restarts;
    km.initial_centers = options.target_centers;
    return clusters_kmeans(t, km);
}

BoundReport bound_unsupervised(const LabeledDataset& s, const TargetSample& t, const Classifier& h, const BoundOptions& options) {
    const std::size_t k = options.k ? options.k : s.num_classes();
    const double conc = concentration_term({options.delta, options.zeta_prime, k});
    const auto t_lab = aligned_target(t, s.class_names);
    const Divergence div = divergence(s, t.points, k, options);
    const HypothesisPool pool = default_pool(s, t_lab);

    BoundReport r;
    r.kind = BoundKind::unsupervised;
    r.hypothesis = h.name();
    r.pool = pool_names(pool);
    fill_params(r, options, k);
    r.terms = {{"source_risk", risk(h, s, options.loss)}, {"hw_distance", div.hw}, {"concentration", conc}};
    if (t_lab) r.terms.emplace_back("lambda", estimate_lambda(s, *t_lab, pool, options.loss));
    r.rhs_total = r.sum_terms();
    if (options.diagnostic) record_diagnostic(r, h, t_lab, options.loss);
    return r;
}

BoundReport bound_corollary(const LabeledDataset& s, const TargetSample& t, const Classifier& h, const BoundOptions& options) {
    const std::size_t k = options.k ? options.k : s.num_classes();
    detail::require(k == s.num_classes(), "bound_corollary: needs as many target clusters as source classes");
    const double conc = concentration_term({options.delta, options.zeta_prime, k});
    const auto t_lab = aligned_target(t, s.class_names);
    const auto src = classes_from_labels(s);
    const auto tgt = bound_target_structures(t.points, k, options);

    const Matrix W = inner_cost_matrix(src.structures, tgt.structures, 1.0);
    const TransportPlan plan = solve_exact(src.structures.weights(), tgt.structures.weights(), CostMatrix(W, 1.0));

    double pairwise = 0.0, iota = 0.0, all_pairs = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        std::size_t sigma = 0;
        for (std::size_t l = 1; l < k; ++l)
            if (plan.coupling(a, l) > plan.coupling(a, sigma)) sigma = l;
        pairwise += W(a, sigma);
        for (std::size_t l = 0; l < k; ++l) {
            all_pairs += W(a, l);
            if (l != sigma) iota = std::max(iota, W(a, l));
        }
    }
    const double kk = static_cast<double>(k);
    const HypothesisPool pool = default_pool(s, t_lab);

    BoundReport r;
    r.kind = BoundKind::corollary;
    r.hypothesis = h.name();
    r.pool = pool_names(pool);
    fill_params(r, options, k);
    r.terms = {{"source_risk", risk(h, s, options.loss)},
               {"pairwise_sum", pairwise},
               {"iota_term", kk * (kk - 1.0) * iota},
               {"concentration", conc}};
    if (t_lab) r.terms.emplace_back("lambda", estimate_lambda(s, *t_lab, pool, options.loss));
    r.components = {{"hw_distance", plan.objective}, {"iota", iota}, {"footnote_bound", all_pairs / kk}};
    r.rhs_total = r.sum_terms();
    if (options.diagnostic) record_diagnostic(r, h, t_lab, options.loss);
    return r;
}

BoundReport bound_semisupervised(const LabeledDataset& s, const TargetSample& t, double theta, double vartheta,
                                 const BoundOptions& options) {
    detail::require(theta >= 0.0 && theta <= 1.0, "bound_semisupervised: theta must lie in [0, 1]");
    detail::require(options.K > 0.0, "bound_semisupervised: K must be > 0");
    const std::size_t k = options.k ? options.k : s.num_classes();
    const double conc = concentration_term({options.delta, options.zeta_prime, k});
    const auto t_lab = aligned_target(t, s.class_names);
    const std::size_t n_target = t_lab ? t_lab->size() : 0;
    detail::require(theta == 0.0 || n_target > 0, "bound_semisupervised: theta > 0 needs labeled target points");
    const double n = static_cast<double>(s.size() + n_target);
    if (vartheta <= 0.0) vartheta = static_cast<double>(n_target) / n;
    detail::require(vartheta > 0.0 && vartheta < 1.0, "bound_semisupervised: vartheta must lie in (0, 1)");

    const HypothesisPool pool = default_pool(s, t_lab);
    const LabeledDataset empty{Matrix(), {}, s.class_names};
    std::vector<double> weighted;
    for (const auto& h : pool) weighted.push_back(weighted_risk(*h, s, t_lab ? *t_lab : empty, theta, options.loss));
    const std::size_t best = argmin_index(weighted);

    const Divergence div = divergence(s, t.points, k, options);
    const double lambda = t_lab ? estimate_lambda(s, *t_lab, pool, options.loss) : 0.0;
    const double K = options.K, th = theta, vt = vartheta;
    const double log_term = std::log(2.0 / options.delta);
    const double deviation = 2.0 * std::sqrt(2.0 * K * ((1.0 - th) * (1.0 - th) / (1.0 - vt) + th * th / vt) * log_term / n);
    const double bias = 4.0 * std::sqrt(K / n) * (th / (n * vt * std::sqrt(vt)) + (1.0 - th) / (n * (1.0 - vt) * std::sqrt(1.0 - vt)));
    const double block = 2.0 * (1.0 - th) * (div.hw + lambda + conc);

    BoundReport r;
    r.kind = BoundKind::semi_supervised;
    r.hypothesis = pool[best]->name();
    r.pool = pool_names(pool);
    fill_params(r, options, k);
    r.theta = {theta};
    r.vartheta = {vartheta};
    if (t_lab) r.terms.emplace_back("target_risk", best_target_risk(pool, *t_lab, options.loss));
    r.terms.emplace_back("sample_deviation", deviation);
    r.terms.emplace_back("sample_bias", bias);
    r.terms.emplace_back("divergence_block", block);
    r.components = {{"hw_distance", div.hw}, {"concentration", conc}, {"weighted_risk", weighted[best]}};
    if (t_lab) r.components.emplace_back("lambda", lambda);
    r.rhs_total = r.sum_terms();
    if (options.diagnostic) record_diagnostic(r, *pool[best], t_lab, options.loss);
    return r;
}

SourceCollection SourceCollection::from_sizes(std::vector<LabeledDataset> sources, std::vector<double> theta) {
    SourceCollection c{std::move(sources), {}, std::move(theta)};
    const double n = static_cast<double>(c.total_size());
    for (const auto& s : c.sources) c.vartheta.push_back(static_cast<double>(s.size()) / n);
    c.validate();
    return c;
}

std::size_t SourceCollection::total_size() const {
    std::size_t n = 0;
    for (const auto& s : sources) n += s.size();
    return n;
}

void SourceCollection::validate() const {
    detail::require(!sources.empty(), "SourceCollection: no sources");
    detail::require(vartheta.size() == sources.size() && theta.size() == sources.size(),
                    "SourceCollection: theta and vartheta need one entry per source");
    check_simplex(theta, "SourceCollection theta");
    check_simplex(vartheta, "SourceCollection vartheta");
    for (double v : vartheta) detail::require(v > 0.0, "SourceCollection: every vartheta must be > 0");
    for (const auto& s : sources) {
        s.validate();
        detail::require(s.size() > 0, "SourceCollection: empty source");
        detail::require(s.dim() == sources.front().dim(), "SourceCollection: sources differ in dimension");
    }
}

MeasureOfMeasures theta_mixture(const SourceCollection& sources) {
    sources.validate();
    std::vector<DiscreteMeasure> atoms;
    std::vector<double> weights;
    for (std::size_t j = 0; j < sources.sources.size(); ++j) {
        const auto cls = classes_from_labels(sources.sources[j]);
        const double kj = static_cast<double>(cls.structures.size());
        for (const auto& a : cls.structures.atoms()) {
            atoms.push_back(a);
            weights.push_back(sources.theta[j] / kj);
        }
    }
    return MeasureOfMeasures(std::move(atoms), std::move(weights));
}

namespace {

/// State shared by both multi-source evaluators.
struct MultiSetup {
    std::vector<LabeledDataset> aligned;
    std::optional<LabeledDataset> t_lab;
    HypothesisPool pool;
    std::size_t k = 0;
    double conc = 0.0;
    std::optional<StructureDecomposition> target;
    /// sum_j theta_j eps_Sj(h) per pool member.
    std::vector<double> weighted;
    std::size_t best = 0;
};

MultiSetup multi_setup(const SourceCollection& c, const TargetSample& t, const BoundOptions& o) {
    c.validate();
    detail::require(o.K > 0.0, "multi-source bound: K must be > 0");
    detail::require(c.sources.front().dim() == t.points.dim(), "multi-source bound: source and target dimensions differ");
    MultiSetup m;
    std::vector<std::string> names;
    for (const auto& s : c.sources) names.insert(names.end(), s.class_names.begin(), s.class_names.end());
    names = order_class_names(std::move(names));
    for (const auto& s : c.sources) m.aligned.push_back(with_classes(s, names));
    m.t_lab = aligned_target(t, names);

    const std::size_t N = c.sources.size();
    if (N == 1) {
        m.pool = default_pool(m.aligned.front(), m.t_lab);
    } else {
        LabeledDataset all{Matrix(), {}, names};
        for (std::size_t j = 0; j < N; ++j) {
            const std::string tag = "S" + std::to_string(j + 1);
            m.pool.push_back(std::make_shared<NearestNeighbor>(m.aligned[j], "1nn(" + tag + ")"));
            m.pool.push_back(std::make_shared<NearestCentroid>(m.aligned[j], "centroid(" + tag + ")"));
            for (std::size_t i = 0; i < m.aligned[j].size(); ++i) {
                all.points.push_row(m.aligned[j].points.row(i));
                all.labels.push_back(m.aligned[j].labels[i]);
            }
        }
        m.pool.push_back(std::make_shared<NearestNeighbor>(all, "1nn(S*)"));
        m.pool.push_back(std::make_shared<NearestCentroid>(all, "centroid(S*)"));
        if (m.t_lab && m.t_lab->size() > 0) {
            m.pool.push_back(std::make_shared<NearestNeighbor>(*m.t_lab, "1nn(T)"));
            m.pool.push_back(std::make_shared<NearestCentroid>(*m.t_lab, "centroid(T)"));
        }
    }

    m.k = o.k ? o.k : names.size();
    m.conc = concentration_term({o.delta, o.zeta_prime, m.k});
    m.target = bound_target_structures(t.points, m.k, o);
    for (const auto& h : m.pool) {
        double w = 0.0;
        for (std::size_t j = 0; j < N; ++j) w += c.theta[j] * risk(*h, m.aligned[j], o.loss);
        m.weighted.push_back(w);
    }
    m.best = argmin_index(m.weighted);
    return m;
}

BoundReport multi_report(BoundKind kind, const SourceCollection& c, const MultiSetup& m, const BoundOptions& o) {
    BoundReport r;
    r.kind = kind;
    r.hypothesis = m.pool[m.best]->name();
    r.pool = pool_names(m.pool);
    fill_params(r, o, m.k);
    r.theta = c.theta;
    r.vartheta = c.vartheta;

    const double n = static_cast<double>(c.total_size());
    double sq = 0.0, lin = 0.0;
    for (std::size_t j = 0; j < c.sources.size(); ++j) {
        sq += c.theta[j] * c.theta[j] / c.vartheta[j];
        lin += o.K * c.theta[j] / (c.vartheta[j] * n);
    }
    if (m.t_lab) r.terms.emplace_back("target_risk", best_target_risk(m.pool, *m.t_lab, o.loss));
    r.terms.emplace_back("sample_deviation", 2.0 * std::sqrt(2.0 * o.K * sq * std::log(2.0 / o.delta) / n));
    r.terms.emplace_back("sample_bias", 2.0 * std::sqrt(lin));
    r.components.emplace_back("concentration", m.conc);
    r.components.emplace_back("weighted_risk", m.weighted[m.best]);
    return r;
}

void finish_multi(BoundReport& r, const MultiSetup& m, const BoundOptions& o) {
    r.rhs_total = r.sum_terms();
    if (o.diagnostic) record_diagnostic(r, *m.pool[m.best], m.t_lab, o.loss);
}

} // namespace

BoundReport bound_multisource_pairwise(const SourceCollection& sources, const TargetSample& t, const BoundOptions& options) {
    const MultiSetup m = multi_setup(sources, t, options);
    BoundReport r = multi_report(BoundKind::multi_pairwise, sources, m, options);

    double hw = 0.0, lambda = 0.0, block = 0.0;
    for (std::size_t j = 0; j < sources.sources.size(); ++j) {
        const std::string tag = "S" + std::to_string(j + 1);
        const auto src = classes_from_labels(sources.sources[j]);
        const double hw_j = hierarchical_wasserstein(src.structures, m.target->structures, 1.0).distance;
        const double lambda_j = m.t_lab ? estimate_lambda(m.aligned[j], *m.t_lab, m.pool, options.loss) : 0.0;
        hw += sources.theta[j] * hw_j;
        lambda += sources.theta[j] * lambda_j;
        block += sources.theta[j] * (hw_j + lambda_j + m.conc);
        r.components.emplace_back("hw_distance_" + tag, hw_j);
        if (m.t_lab) r.components.emplace_back("lambda_" + tag, lambda_j);
    }
    r.terms.emplace_back("divergence_block", 2.0 * block);
    r.components.emplace_back("hw_distance", hw);
    if (m.t_lab) r.components.emplace_back("lambda", lambda);
    finish_multi(r, m, options);
    return r;
}

BoundReport bound_multisource_combined(const SourceCollection& sources, const TargetSample& t, const BoundOptions& options) {
    const MultiSetup m = multi_setup(sources, t, options);
    BoundReport r = multi_report(BoundKind::multi_combined, sources, m, options);

    const double hw = hierarchical_wasserstein(theta_mixture(sources), m.target->structures, 1.0).distance;
    double lambda = 0.0;
    if (m.t_lab) {
        // Joint error of the theta-mixture of sources with the target.
        lambda = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m.pool.size(); ++i)
            lambda = std::min(lambda, m.weighted[i] + risk(*m.pool[i], *m.t_lab, options.loss));
    }
    r.terms.emplace_back("divergence_block", 2.0 * (hw + lambda + m.conc));
    r.components.emplace_back("hw_distance", hw);
    if (m.t_lab) r.components.emplace_back("lambda", lambda);
    finish_multi(r, m, options);
    return r;
}

} // namespace hotda
