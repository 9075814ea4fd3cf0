#include "hotda/error.hpp"
#include "hotda/ot_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace hotda;

namespace {

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

void check_feasible(const TransportPlan& plan, std::span<const double> a, std::span<const double> b, double tol) {
    for (double v : plan.coupling.data()) CHECK(v >= 0.0);
    CHECK(marginal_violation(plan.coupling, a, b) <= tol);
    CHECK(plan.marginal_violation <= tol);
}

} // namespace

TEST_CASE("discrete measure validation") {
    CHECK_THROWS_AS(DiscreteMeasure(Matrix(0, 2), {}), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure(Matrix{{0.0}, {1.0}}, {0.7, 0.7}), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure(Matrix{{0.0}, {1.0}}, {1.2, -0.2}), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure(Matrix{{0.0}, {1.0}}, {1.0}), InvalidInput);
    CHECK_NOTHROW(DiscreteMeasure(Matrix{{0.0}, {1.0}}, {0.25, 0.75}));
}

TEST_CASE("merging collapses duplicate atoms and drops empty ones") {
    const DiscreteMeasure mu(Matrix{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {5.0, 5.0}}, {0.2, 0.3, 0.5, 0.0});
    const auto m = mu.merged();
    REQUIRE(m.size() == 2);
    CHECK(m.weights()[0] == doctest::Approx(0.7));
    CHECK(m.weights()[1] == doctest::Approx(0.3));
    CHECK(same_measure(mu, DiscreteMeasure(Matrix{{1.0, 1.0}, {0.0, 0.0}}, {0.3, 0.7})));
}

TEST_CASE("cost matrix rejects negative or non-finite entries") {
    CHECK_THROWS_AS(CostMatrix(Matrix{{1.0, -1.0}}), InvalidInput);
    CHECK_THROWS_AS(CostMatrix(Matrix{{NAN}}), InvalidInput);
    const auto mu = DiscreteMeasure::uniform(Matrix{{0.0, 0.0}, {3.0, 4.0}});
    const auto c = cost_matrix(mu, mu, 2.0);
    CHECK(c(0, 1) == doctest::Approx(25.0));
    CHECK(squared_euclidean_cost(mu, mu)(1, 0) == doctest::Approx(25.0));
}

TEST_CASE("exact solver matches the permutation oracle on uniform instances") {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        const auto x = oracle::random_points(rng, n, 2), y = oracle::random_points(rng, n, 2);
        const CostMatrix c(oracle::naive_cost(x, y, 1.0));
        const auto w = uniform_weights(n);
        const auto plan = solve_exact(w, w, c);
        CHECK(plan.objective == doctest::Approx(oracle::permutation_min(c.entries)).epsilon(1e-12));
        check_feasible(plan, w, w, 1e-9);
    }
}

TEST_CASE("exact solver matches vertex enumeration on general marginals") {
    Rng rng(2);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(4);
        const auto a = oracle::random_simplex(rng, n), b = oracle::random_simplex(rng, m);
        const auto x = oracle::random_points(rng, n, 3), y = oracle::random_points(rng, m, 3);
        const CostMatrix c(oracle::naive_cost(x, y, 2.0));
        const auto plan = solve_exact(a, b, c);
        CHECK(plan.objective == doctest::Approx(oracle::vertex_min(a, b, c.entries)).epsilon(1e-10));
        check_feasible(plan, a, b, 1e-9);
    }
}

TEST_CASE("exact solver handles zero-weight atoms and rejects bad input") {
    const std::vector<double> a{0.5, 0.0, 0.5}, b{1.0};
    const CostMatrix c(Matrix{{1.0}, {100.0}, {3.0}});
    const auto plan = solve_exact(a, b, c);
    CHECK(plan.objective == doctest::Approx(2.0));
    CHECK(plan.coupling(1, 0) == 0.0);

    const std::vector<double> bad{0.5, 0.6};
    CHECK_THROWS_AS(solve_exact(bad, b, CostMatrix(Matrix{{1.0}, {1.0}})), InvalidInput);
    CHECK_THROWS_AS(solve_exact(b, b, c), InvalidInput);
}

TEST_CASE("sinkhorn approaches the exact cost as epsilon shrinks") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + rng.below(6), m = 3 + rng.below(6);
        const auto a = oracle::random_simplex(rng, n), b = oracle::random_simplex(rng, m);
        const CostMatrix c(oracle::naive_cost(oracle::random_points(rng, n, 2), oracle::random_points(rng, m, 2), 1.0));
        const double exact = solve_exact(a, b, c).objective;
        double cmax = 0.0;
        for (double v : c.entries.data()) cmax = std::max(cmax, v);
        double previous_gap = INFINITY;
        for (double scale : {1e-1, 1e-2, 1e-3}) {
            const auto plan = solve_sinkhorn(a, b, c, {.epsilon = scale * cmax});
            CHECK(plan.info.converged);
            check_feasible(plan, a, b, 1e-9);
            const double gap = plan.objective - exact;
            CHECK(gap >= -1e-9);
            CHECK(gap <= previous_gap + 1e-9);
            previous_gap = gap;
        }
        CHECK(previous_gap <= 0.01 * exact + 1e-9);
    }
}

TEST_CASE("log-domain solver agrees with plain scaling") {
    Rng rng(5);
    const auto a = oracle::random_simplex(rng, 7), b = oracle::random_simplex(rng, 5);
    const CostMatrix c(oracle::naive_cost(oracle::random_points(rng, 7, 2), oracle::random_points(rng, 5, 2), 2.0));
    const SinkhornOptions plain{.epsilon = 0.2};
    SinkhornOptions forced = plain;
    forced.force_log_domain = true;
    const auto p1 = solve_sinkhorn(a, b, c, plain);
    const auto p2 = solve_sinkhorn(a, b, c, forced);
    CHECK(p1.info.method == SolverMethod::sinkhorn);
    CHECK(p2.info.method == SolverMethod::sinkhorn_log);
    for (std::size_t k = 0; k < p1.coupling.data().size(); ++k)
        CHECK(p1.coupling.data()[k] == doctest::Approx(p2.coupling.data()[k]).epsilon(1e-7));
}

TEST_CASE("tiny epsilon switches to the log domain instead of failing") {
    const std::vector<double> a{0.5, 0.5}, b{0.5, 0.5};
    const CostMatrix c(Matrix{{0.0, 1000.0}, {1000.0, 0.0}});
    const auto plan = solve_sinkhorn(a, b, c, {.epsilon = 0.5});
    CHECK(plan.info.method == SolverMethod::sinkhorn_log);
    CHECK(plan.objective == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sinkhorn optimum beats nearby feasible plans on the regularized objective") {
    // First-order optimality: perturbing along a zero-marginal direction cannot lower
    // <P, C> - eps H(P).
    Rng rng(6);
    const auto a = oracle::random_simplex(rng, 4), b = oracle::random_simplex(rng, 4);
    const CostMatrix c(oracle::naive_cost(oracle::random_points(rng, 4, 2), oracle::random_points(rng, 4, 2), 1.0));
    const double eps = 0.05;
    const auto plan = solve_sinkhorn(a, b, c, {.epsilon = eps});
    const auto objective = [&](const Matrix& p) { return frobenius(p, c.entries) - eps * entropy(p); };
    const double base = objective(plan.coupling);
    for (int t = 0; t < 50; ++t) {
        const std::size_t i = rng.below(4), j = rng.below(4), i2 = (i + 1 + rng.below(3)) % 4, j2 = (j + 1 + rng.below(3)) % 4;
        Matrix q = plan.coupling;
        const double h = 1e-4 * std::min({q(i, j), q(i2, j2), q(i, j2), q(i2, j)});
        q(i, j) += h, q(i2, j2) += h, q(i, j2) -= h, q(i2, j) -= h;
        CHECK(objective(q) >= base - 1e-12);
    }
}

TEST_CASE("entropy and marginal helpers") {
    CHECK(entropy(Matrix{{1.0, 0.0}}) == doctest::Approx(1.0));
    CHECK(entropy(Matrix{{0.5, 0.5}}) == doctest::Approx(std::log(2.0) + 1.0));
    const std::vector<double> a{0.5, 0.5}, b{1.0};
    CHECK(marginal_violation(Matrix{{0.4}, {0.5}}, a, b) == doctest::Approx(0.2));
    CHECK(median_entry(Matrix{{3.0, 1.0}, {2.0, 10.0}}) == doctest::Approx(2.5));
}

TEST_CASE("sinkhorn option validation") {
    const std::vector<double> a{1.0};
    const CostMatrix c(Matrix{{1.0}});
    CHECK_THROWS_AS(solve_sinkhorn(a, a, c, {.epsilon = 0.0}), InvalidInput);
    CHECK_THROWS_AS(solve_sinkhorn(a, a, c, {.epsilon = 1.0, .tol = 0.0}), InvalidInput);
    CHECK_THROWS_AS(solve_sinkhorn(a, a, c, {.epsilon = 1.0, .tol = 1e-9, .max_iter = 0}), InvalidInput);
}
