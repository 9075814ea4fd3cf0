#pragma once

#include "hotda/classifier.hpp"
#include "hotda/structures.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Numerical evaluators for the hierarchical-Wasserstein generalization bounds. Every
// distance here is HW_1 / W_1 with exact solvers. The joint error lambda is not estimable;
// it is replaced by the best combined risk over a finite hypothesis pool, which the report
// lists so the number can be audited.

namespace hotda {

struct ConcentrationParams {
    double delta = 0.05;
    /// Transport-inequality constant; there is no sensible default, callers must supply it.
    double zeta_prime = 0.0;
    std::size_t k = 1;

    void validate() const;
};

/// 2 sqrt(2 ln(1/delta) / (zeta' k)).
double concentration_term(const ConcentrationParams& params);

enum class BoundKind { unsupervised, corollary, semi_supervised, multi_pairwise, multi_combined };
std::string to_string(BoundKind kind);

using NamedValues = std::vector<std::pair<std::string, double>>;

struct BoundReport {
    BoundKind kind = BoundKind::unsupervised;
    /// Summands of the right-hand side, in display order.
    NamedValues terms;
    /// Quantities the terms are built from (distances, lambda estimates, per-source values).
    /// Not summed.
    NamedValues components;
    /// Names of the hypotheses lambda and the risk minimizer were taken over.
    std::vector<std::string> pool;
    /// The hypothesis whose risk the bound is about.
    std::string hypothesis;
    double rhs_total = 0.0;
    std::optional<double> lhs_target_risk;
    std::optional<bool> satisfied;

    double delta = 0.0;
    double zeta_prime = 0.0;
    double K = 1.0;
    std::size_t k = 0;
    std::vector<double> theta;
    std::vector<double> vartheta;

    std::uint64_t seed = 0;
    std::string backend = "exact";
    double epsilon = 0.0;

    /// Value of a term or component; throws InvalidInput if absent.
    double value(const std::string& name) const;
    bool has_term(const std::string& name) const;
    /// Sum of the terms in order.
    double sum_terms() const;
};

/// Labeled target data on top of the unlabeled sample used for clustering.
struct TargetSample {
    UnlabeledDataset points;
    /// Labeled target points: revealed labels for diagnostics, or the small labeled subset
    /// in the semi-supervised setting.
    std::optional<LabeledDataset> labeled;

    static TargetSample unlabeled(UnlabeledDataset t) { return {std::move(t), std::nullopt}; }
    /// Clusters the labeled points themselves and keeps their labels for diagnostics.
    static TargetSample revealed(const LabeledDataset& t) { return {drop_labels(t), t}; }
};

struct BoundOptions {
    double delta = 0.05;
    double zeta_prime = 0.0;
    /// Kernel bound in the sample-complexity terms.
    double K = 1.0;
    /// Target cluster count; 0 means the number of source classes.
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    std::optional<Matrix> target_centers;
    Loss loss;
    /// Evaluate the target risk of the bounded hypothesis and record whether the bound held.
    bool diagnostic = false;
};

using HypothesisPool = std::vector<ClassifierPtr>;

/// 1-NN and nearest-centroid fitted on the source, plus the same two fitted on the labeled
/// target when there is one.
HypothesisPool default_pool(const LabeledDataset& s, const std::optional<LabeledDataset>& t_labeled);

/// min over the pool of eps_S(h) + eps_T(h). Both datasets must share class names.
double estimate_lambda(const LabeledDataset& s, const LabeledDataset& t_labeled, const HypothesisPool& pool,
                       const Loss& loss = Loss::zero_one());

/// theta eps_T(h) + (1 - theta) eps_S(h). The target set may be empty when theta = 0.
double weighted_risk(const Classifier& h, const LabeledDataset& s, const LabeledDataset& t_labeled, double theta,
                     const Loss& loss = Loss::zero_one());

/// Target structures used by every evaluator: k-means with the options' seed.
StructureDecomposition bound_target_structures(const UnlabeledDataset& t, std::size_t k, const BoundOptions& options);

BoundReport bound_unsupervised(const LabeledDataset& s, const TargetSample& t, const Classifier& h,
                               const BoundOptions& options);

/// Replaces HW_1 by the pairwise sum along the argmax matching of the exact outer plan plus
/// k(k-1) times the largest off-match distance.
BoundReport bound_corollary(const LabeledDataset& s, const TargetSample& t, const Classifier& h,
                            const BoundOptions& options);

/// Bound on the target risk of the pool member minimizing the theta-weighted risk.
/// vartheta <= 0 means |T_labeled| / (|S| + |T_labeled|).
BoundReport bound_semisupervised(const LabeledDataset& s, const TargetSample& t, double theta, double vartheta,
                                 const BoundOptions& options);

struct SourceCollection {
    std::vector<LabeledDataset> sources;
    /// Share of the pooled sample coming from each source.
    std::vector<double> vartheta;
    /// Weight of each source in the weighted risk.
    std::vector<double> theta;

    /// vartheta from the source sizes.
    static SourceCollection from_sizes(std::vector<LabeledDataset> sources, std::vector<double> theta);
    std::size_t total_size() const;
    void validate() const;
};

BoundReport bound_multisource_pairwise(const SourceCollection& sources, const TargetSample& t, const BoundOptions& options);
BoundReport bound_multisource_combined(const SourceCollection& sources, const TargetSample& t, const BoundOptions& options);

/// sum_j theta_j / k_j delta over every class structure of every source.
MeasureOfMeasures theta_mixture(const SourceCollection& sources);

} // namespace hotda
