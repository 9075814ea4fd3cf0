#pragma once

#include "hotda/classifier.hpp"
#include "hotda/structures.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace hotda {

struct MatchOptions {
    /// Outer entropic regularization; <= 0 means 0.01 * median of the structure cost matrix.
    double epsilon = 0.0;
    /// Order of the inner Wasserstein distances between class and cluster measures.
    double p = 2.0;
    Backend inner = Backend::exact();
    /// Entries within this relative distance of the row maximum count as tied.
    double tie_tolerance = 1e-6;
};

/// Class -> cluster correspondence read off the regularized structure-level plan.
struct Matching {
    /// k x k entropic plan between the source and target structures.
    TransportPlan outer_plan;
    /// W_p(rho_h, varrho_l), the structure-level cost.
    Matrix cost;
    /// sigma[h] = argmax_l plan(h, l), ties to the lowest l.
    std::vector<std::size_t> sigma;
    /// Rows whose argmax was not unique.
    std::vector<std::size_t> tie_rows;
    /// Clusters chosen by more than one class (sigma is not a bijection).
    std::vector<std::size_t> collisions;
    double epsilon = 0.0;
};

Matching match_structures(const MeasureOfMeasures& phi_s, const MeasureOfMeasures& phi_t, const MatchOptions& options = {});

/// Maps every support point of `source` to the plan-weighted average of the `target` support
/// points: diag(gamma 1)^-1 gamma Y, with gamma the entropic plan for squared Euclidean cost.
/// epsilon_prime <= 0 selects 0.01 * median of the ground costs.
Matrix barycentric_transport(const DiscreteMeasure& source, const DiscreteMeasure& target, double epsilon_prime = 0.0);

struct AdaptConfig {
    /// Number of target clusters; 0 means the number of source classes.
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    /// Start clustering from these centers instead of k-means++ restarts.
    std::optional<Matrix> initial_centers;
    MatchOptions match;
    double epsilon_prime = 0.0;
    OuterWeights outer_weights = OuterWeights::uniform;
};

struct TransportedDataset {
    Matrix points;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    /// provenance[i] = (source class h, target cluster sigma(h)) of row i.
    std::vector<std::pair<std::size_t, std::size_t>> provenance;

    LabeledDataset as_labeled() const { return LabeledDataset{points, labels, class_names}; }
};

struct AdaptResult {
    TransportedDataset transported;
    Matching matching;
    StructureDecomposition source_structures;
    StructureDecomposition target_structures;
};

/// Classes from labels, clusters by k-means, structure matching, then per-class barycentric
/// transport onto the matched cluster. Deterministic for a fixed config.
AdaptResult adapt(const LabeledDataset& s, const UnlabeledDataset& t, const AdaptConfig& config = {});

/// 1-NN fitted on the transported source; the pipeline's downstream classifier.
NearestNeighbor adapted_classifier(const AdaptResult& result);

} // namespace hotda
