#pragma once

#include "hotda/structures.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hotda {

/// Gaussian-blob domain pair: one isotropic Gaussian per class, the target moved by a
/// per-class shift and optionally with class identities permuted.
struct ScenarioSpec {
    std::size_t k = 2;
    std::size_t d = 2;
    std::size_t n_source = 100;
    std::size_t n_target = 100;
    /// k x d
    Matrix class_centers;
    /// k x d displacement of each class in the target; empty means no shift.
    Matrix shift;
    /// Per-class standard deviation; a single entry applies to every class.
    std::vector<double> spread{1.0};
    /// Class proportions; empty means uniform.
    std::vector<double> proportions;
    /// Target points of class y are drawn from the (shifted) blob of class permutation[y].
    std::optional<std::vector<std::size_t>> label_permutation;
    std::uint64_t seed = 0;

    void validate() const;

    /// Centers on a circle (a line when d = 1) with adjacent centers `separation` apart,
    /// a common target shift of `shift_length` in a seed-chosen direction, and per-class
    /// jitter of at most `jitter` added to it.
    static ScenarioSpec shifted_blobs(std::size_t k, std::size_t d, std::size_t n, double separation, double spread,
                                      double shift_length, double jitter, std::uint64_t seed);
};

struct Scenario {
    LabeledDataset source;
    /// Target with its true labels; drop them for unsupervised use.
    LabeledDataset target;
};

/// Class counts are split proportionally (largest remainder, at least one point per class),
/// then shuffled. Deterministic in the seed.
Scenario generate(const ScenarioSpec& spec);

struct MultiScenario {
    std::vector<LabeledDataset> sources;
    LabeledDataset target;
};

/// Source j is drawn around class_centers + source_shifts[j] with spec.n_source points;
/// the target follows spec exactly as in generate().
MultiScenario generate_multisource(const ScenarioSpec& spec, const std::vector<Matrix>& source_shifts);

} // namespace hotda
