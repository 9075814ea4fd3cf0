#include "hotda/datagen.hpp"
#include "hotda/error.hpp"
#include "hotda/pipeline.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace hotda;

TEST_CASE("barycentric map onto a Dirac sends every point to it") {
    Rng rng(40);
    const auto src = DiscreteMeasure::uniform(oracle::random_points(rng, 12, 3));
    const std::vector<double> z{1.5, -2.0, 0.25};
    const Matrix out = barycentric_transport(src, DiscreteMeasure::dirac(z));
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(out(i, c) == doctest::Approx(z[c]).epsilon(1e-12));
}

TEST_CASE("barycentric images stay inside the target bounding box") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto src = DiscreteMeasure::uniform(oracle::random_points(rng, 5 + rng.below(10), 2, 5.0));
        const auto tgt = DiscreteMeasure::uniform(oracle::random_points(rng, 3 + rng.below(10), 2));
        const Matrix out = barycentric_transport(src, tgt, trial % 2 ? 0.0 : 1e-3);
        for (std::size_t c = 0; c < 2; ++c) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t j = 0; j < tgt.size(); ++j) lo = std::min(lo, tgt.point(j)[c]), hi = std::max(hi, tgt.point(j)[c]);
            for (std::size_t i = 0; i < out.rows(); ++i) {
                CHECK(out(i, c) >= lo);
                CHECK(out(i, c) <= hi);
            }
        }
    }
}

TEST_CASE("small epsilon barycentric map approaches the optimal assignment") {
    // Uniform n-to-n with tiny regularization: each point goes to its assigned partner.
    const auto src = DiscreteMeasure::uniform(Matrix{{0.0, 0.0}, {10.0, 0.0}});
    const auto tgt = DiscreteMeasure::uniform(Matrix{{10.5, 0.0}, {0.5, 0.0}});
    const Matrix out = barycentric_transport(src, tgt, 1e-2);
    CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out(1, 0) == doctest::Approx(10.5).epsilon(1e-6));
}

TEST_CASE("matching picks the nearest structure and flags ties") {
    const auto a = DiscreteMeasure::uniform(Matrix{{0.0}});
    const auto b = DiscreteMeasure::uniform(Matrix{{10.0}});
    const auto phi = MeasureOfMeasures::uniform({a, b});
    const auto m = match_structures(phi, MeasureOfMeasures::uniform({b, a}));
    CHECK(m.sigma == std::vector<std::size_t>{1, 0});
    CHECK(m.tie_rows.empty());
    CHECK(m.collisions.empty());
    CHECK(m.epsilon > 0.0);

    // Both target atoms identical: every row is a tie and resolves to index 0.
    const auto tied = match_structures(phi, MeasureOfMeasures::uniform({a, a}));
    CHECK(tied.sigma == std::vector<std::size_t>{0, 0});
    CHECK(tied.tie_rows == std::vector<std::size_t>{0, 1});
    CHECK(tied.collisions == std::vector<std::size_t>{0});
}

TEST_CASE("adaptation matches each class to the cluster carrying its target points") {
    const auto sc = generate(ScenarioSpec::shifted_blobs(3, 2, 150, 12.0, 0.8, 3.0, 0.2, 7));
    const auto r = adapt(sc.source, drop_labels(sc.target), {.seed = 7});
    REQUIRE(r.matching.sigma.size() == 3);
    // Majority true label of each cluster gives the class sigma should point at.
    for (std::size_t h = 0; h < 3; ++h) {
        const auto members = r.target_structures.members(r.matching.sigma[h]);
        std::vector<std::size_t> votes(3, 0);
        for (std::size_t i : members) ++votes[static_cast<std::size_t>(sc.target.labels[i])];
        CHECK(static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin()) == h);
    }
    const auto h = adapted_classifier(r);
    CHECK(empirical_risk(h, sc.target).value <= 0.02);
    CHECK(r.transported.points.rows() == sc.source.size());
    for (std::size_t i = 0; i < sc.source.size(); ++i) {
        CHECK(r.transported.labels[i] == sc.source.labels[i]);
        CHECK(r.transported.provenance[i].first == static_cast<std::size_t>(sc.source.labels[i]));
    }
}

TEST_CASE("self-adaptation from class means reproduces the labels") {
    const auto sc = generate(ScenarioSpec::shifted_blobs(4, 3, 80, 6.0, 1.0, 0.0, 0.0, 3));
    const auto r = adapt(sc.source, drop_labels(sc.source), {.initial_centers = class_means(sc.source)});
    CHECK(empirical_risk(adapted_classifier(r), sc.source).value == 0.0);
}

TEST_CASE("adapt is deterministic and validates input") {
    const auto sc = generate(ScenarioSpec::shifted_blobs(2, 2, 40, 8.0, 1.0, 2.0, 0.0, 1));
    const auto a = adapt(sc.source, drop_labels(sc.target), {.seed = 4});
    const auto b = adapt(sc.source, drop_labels(sc.target), {.seed = 4});
    CHECK(a.transported.points == b.transported.points);
    CHECK(a.matching.sigma == b.matching.sigma);

    UnlabeledDataset wrong{Matrix{{0.0}, {1.0}}};
    CHECK_THROWS_AS(adapt(sc.source, wrong), InvalidInput);
}
