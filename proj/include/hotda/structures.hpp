#pragma once

#include "hotda/hierarchical.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hotda {

/// Points with class labels. labels[i] indexes class_names; classes are kept in sorted name
/// order so the class index does not depend on row order.
struct LabeledDataset {
    Matrix points;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return points.rows(); }
    std::size_t dim() const noexcept { return points.cols(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    /// Throws InvalidInput on shape mismatches or out-of-range labels.
    void validate() const;
};

struct UnlabeledDataset {
    Matrix points;

    std::size_t size() const noexcept { return points.rows(); }
    std::size_t dim() const noexcept { return points.cols(); }
};

/// Builds a labeled dataset from raw label strings. Class order is numeric when every label
/// parses as an integer, lexicographic otherwise.
LabeledDataset make_labeled(Matrix points, const std::vector<std::string>& raw_labels);
/// Deduplicated class names in canonical order (numeric if all parse as integers).
std::vector<std::string> order_class_names(std::vector<std::string> names);
/// Re-indexes labels against `class_names`, which must contain every class of `s`.
LabeledDataset with_classes(const LabeledDataset& s, const std::vector<std::string>& class_names);
/// Class names "0".."k-1".
LabeledDataset make_labeled(Matrix points, std::vector<int> labels, std::size_t num_classes);

UnlabeledDataset drop_labels(const LabeledDataset& s);

enum class StructureKind { class_based, cluster_based };

/// Outer weights of a structure decomposition: 1/k each, or |C_h| / n.
enum class OuterWeights { uniform, proportional };

struct StructureDecomposition {
    MeasureOfMeasures structures;
    /// membership[i] = structure index of point i.
    std::vector<std::size_t> membership;
    StructureKind kind = StructureKind::class_based;
    /// Within-structure sum of squared distances to the structure mean.
    double inertia = 0.0;

    /// Row indices of the points in structure h, in dataset order.
    std::vector<std::size_t> members(std::size_t h) const;
};

/// One atom per class, each the uniform measure over that class's points, in class order.
StructureDecomposition classes_from_labels(const LabeledDataset& s, OuterWeights weights = OuterWeights::uniform);

struct KMeansOptions {
    std::size_t k = 1;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    /// When set, a single Lloyd run starts from these centers and no k-means++ seeding happens.
    std::optional<Matrix> initial_centers;
};

struct KMeansResult {
    Matrix centers;
    std::vector<std::size_t> membership;
    double inertia = 0.0;
    /// Inertia after every assignment step of the selected run.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
    std::size_t best_restart = 0;
};

/// Lloyd's algorithm with k-means++ seeding. The lowest-inertia restart wins, ties by restart
/// index. Clusters are renumbered by first appearance in row order. Empty clusters are
/// re-seeded at the point farthest from its nearest center.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

StructureDecomposition clusters_kmeans(const UnlabeledDataset& t, std::size_t k, std::uint64_t seed = 0,
                                       std::size_t restarts = 10, OuterWeights weights = OuterWeights::uniform);
StructureDecomposition clusters_kmeans(const UnlabeledDataset& t, const KMeansOptions& options,
                                       OuterWeights weights = OuterWeights::uniform);

/// Structure decomposition from an arbitrary membership vector (values in [0, k), none empty).
StructureDecomposition structures_from_membership(const Matrix& points, const std::vector<std::size_t>& membership,
                                                  std::size_t k, StructureKind kind, OuterWeights weights);

/// Per-class means, k x d.
Matrix class_means(const LabeledDataset& s);

} // namespace hotda
