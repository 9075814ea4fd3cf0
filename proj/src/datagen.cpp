#include "hotda/datagen.hpp"

#include "hotda/error.hpp"
#include "hotda/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hotda {

void ScenarioSpec::validate() const {
    detail::require(k >= 1 && d >= 1, "ScenarioSpec: k and d must be >= 1");
    detail::require(n_source >= k && n_target >= k, "ScenarioSpec: counts must be at least k");
    detail::require(class_centers.rows() == k && class_centers.cols() == d, "ScenarioSpec: class_centers must be k x d");
    detail::require(shift.empty() || (shift.rows() == k && shift.cols() == d), "ScenarioSpec: shift must be k x d");
    detail::require(spread.size() == 1 || spread.size() == k, "ScenarioSpec: spread needs 1 or k entries");
    for (double s : spread) detail::require(s > 0.0 && std::isfinite(s), "ScenarioSpec: spread must be > 0");
    if (!proportions.empty()) {
        detail::require(proportions.size() == k, "ScenarioSpec: proportions need k entries");
        check_simplex(proportions, "ScenarioSpec proportions");
    }
    if (label_permutation) {
        std::vector<std::size_t> p = *label_permutation;
        std::sort(p.begin(), p.end());
        std::vector<std::size_t> id(k);
        std::iota(id.begin(), id.end(), 0);
        detail::require(p == id, "ScenarioSpec: label_permutation is not a permutation of 0..k-1");
    }
}

ScenarioSpec ScenarioSpec::shifted_blobs(std::size_t k, std::size_t d, std::size_t n, double separation, double spread,
                                         double shift_length, double jitter, std::uint64_t seed) {
    detail::require(k >= 1 && d >= 1, "shifted_blobs: k and d must be >= 1");
    ScenarioSpec spec;
    spec.k = k;
    spec.d = d;
    spec.n_source = spec.n_target = n;
    spec.spread = {spread};
    spec.seed = seed;
    spec.class_centers = Matrix(k, d, 0.0);
    const double pi = std::numbers::pi;
    const double radius = k > 1 ? separation / (2.0 * std::sin(pi / static_cast<double>(k))) : 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (d == 1) {
            spec.class_centers(c, 0) = separation * static_cast<double>(c);
        } else {
            const double angle = 2.0 * pi * static_cast<double>(c) / static_cast<double>(k);
            spec.class_centers(c, 0) = radius * std::cos(angle);
            spec.class_centers(c, 1) = radius * std::sin(angle);
        }
    }

    Rng rng(seed, 7);
    std::vector<double> dir(d);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : dir) {
            v = rng.normal();
            norm += v * v;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    spec.shift = Matrix(k, d, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j)
            spec.shift(c, j) = shift_length * dir[j] / norm + jitter * (2.0 * rng.uniform() - 1.0) / std::sqrt(static_cast<double>(d));
    return spec;
}

namespace {

std::vector<int> stratified_labels(std::size_t n, const std::vector<double>& proportions, Rng& rng) {
    const std::size_t k = proportions.size();
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double exact = proportions[c] * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % k].second];
    // Every class gets a point, taken from the largest class.
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0) {
            --counts[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
            counts[c] = 1;
        }

    std::vector<int> labels;
    for (std::size_t c = 0; c < k; ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
    return labels;
}

LabeledDataset draw(const ScenarioSpec& spec, std::size_t n, const Matrix* offset, bool permute, Rng& rng) {
    const std::vector<double> props =
        spec.proportions.empty() ? std::vector<double>(spec.k, 1.0 / static_cast<double>(spec.k)) : spec.proportions;
    std::vector<int> labels = stratified_labels(n, props, rng);
    Matrix points(n, spec.d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = static_cast<std::size_t>(labels[i]);
        const std::size_t blob = permute && spec.label_permutation ? (*spec.label_permutation)[y] : y;
        const double sd = spec.spread.size() == 1 ? spec.spread[0] : spec.spread[blob];
        for (std::size_t j = 0; j < spec.d; ++j) {
            double v = spec.class_centers(blob, j) + sd * rng.normal();
            if (offset && !offset->empty()) v += (*offset)(blob, j);
            points(i, j) = v;
        }
    }
    return make_labeled(std::move(points), std::move(labels), spec.k);
}

} // namespace

Scenario generate(const ScenarioSpec& spec) {
    spec.validate();
    Rng source_rng(spec.seed, 0), target_rng(spec.seed, 1);
    Scenario s;
    s.source = draw(spec, spec.n_source, nullptr, false, source_rng);
    s.target = draw(spec, spec.n_target, &spec.shift, true, target_rng);
    return s;
}

MultiScenario generate_multisource(const ScenarioSpec& spec, const std::vector<Matrix>& source_shifts) {
    spec.validate();
    detail::require(!source_shifts.empty(), "generate_multisource: need at least one source");
    MultiScenario m;
    for (std::size_t j = 0; j < source_shifts.size(); ++j) {
        const Matrix& off = source_shifts[j];
        detail::require(off.empty() || (off.rows() == spec.k && off.cols() == spec.d),
                        "generate_multisource: source shifts must be k x d");
        Rng rng(spec.seed, 2 + j);
        m.sources.push_back(draw(spec, spec.n_source, &off, false, rng));
    }
    Rng target_rng(spec.seed, 1);
    m.target = draw(spec, spec.n_target, &spec.shift, true, target_rng);
    return m;
}

} // namespace hotda
