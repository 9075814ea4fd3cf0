// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "hotda/bounds.hpp"
#include "hotda/datagen.hpp"
#include "hotda/hierarchical.hpp"
#include "hotda/io.hpp"
#include "hotda/pipeline.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace hotda;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DiscreteMeasure random_measure(Rng& rng, std::size_t n, std::size_t d, double offset = 0.0) {
    Matrix pts = oracle::random_points(rng, n, d);
    for (double& v : pts.data()) v += offset;
    return {std::move(pts), oracle::random_simplex(rng, n)};
}

MeasureOfMeasures random_mom(Rng& rng, std::size_t atoms, std::size_t d) {
    std::vector<DiscreteMeasure> a;
    for (std::size_t i = 0; i < atoms; ++i) a.push_back(random_measure(rng, 1 + rng.below(4), d, 4.0 * rng.uniform()));
    return {std::move(a), oracle::random_simplex(rng, atoms)};
}

double max_entry(const Matrix& m) { return *std::max_element(m.data().begin(), m.data().end()); }

// ---------------------------------------------------------------------------------------

Outcome exact_vs_permutations() {
    Rng rng(101);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 5);
        Matrix c;
        // Alternate Euclidean costs with unstructured ones.
        if (t % 2 == 0) c = oracle::naive_cost(oracle::random_points(rng, n, 2), oracle::random_points(rng, n, 2), 1.0);
        else c = oracle::random_points(rng, n, n), std::for_each(c.data().begin(), c.data().end(), [](double& v) { v = std::abs(v); });
        const std::vector<double> w(n, 1.0 / static_cast<double>(n));
        const auto plan = solve_exact(w, w, CostMatrix(c));
        worst = std::max(worst, std::abs(plan.objective - oracle::permutation_min(c)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 10.0, fmt("500 instances, max |exact - brute force| = %.2e, %.2f s", worst, secs)};
}

Outcome sinkhorn_convergence() {
    Rng rng(202);
    const auto t0 = std::chrono::steady_clock::now();
    double worst_rel = 0.0, worst_viol = 0.0, worst_raw = 0.0;
    int unconverged = 0;
    std::size_t max_iter = 0;
    for (int t = 0; t < 100; ++t) {
        const auto mu = DiscreteMeasure::uniform(oracle::random_points(rng, 10, 2));
        const auto nu = DiscreteMeasure::uniform(oracle::random_points(rng, 10, 2));
        const auto c = cost_matrix(mu, nu, 1.0);
        const double exact = solve_exact(mu.weights(), nu.weights(), c).objective;
        const auto plan = solve_sinkhorn(mu.weights(), nu.weights(), c, {.epsilon = 1e-3 * max_entry(c.entries)});
        worst_rel = std::max(worst_rel, std::abs(plan.objective - exact) / exact);
        worst_viol = std::max(worst_viol, plan.marginal_violation);
        worst_raw = std::max(worst_raw, plan.info.raw_marginal_violation);
        unconverged += !plan.info.converged;
        max_iter = std::max(max_iter, plan.info.iterations);
    }
    const double secs = seconds_since(t0);
    // Convergence is judged on the iterate itself, not only after the feasibility rounding.
    const bool pass = worst_rel <= 0.01 && worst_viol <= 1e-9 && worst_raw <= 1e-9 && unconverged == 0 && secs < 30.0;
    return {pass, fmt("100 instances, max rel cost gap %.2e, max violation %.2e (raw %.2e), %d unconverged, "
                      "max %zu iterations, %.2f s",
                      worst_rel, worst_viol, worst_raw, unconverged, max_iter, secs)};
}

Outcome metric_axioms() {
    Rng rng(303);
    double sym = 0.0, tri = -INFINITY, self = 0.0;
    int separated = 0;
    for (int t = 0; t < 200; ++t) {
        const auto a = random_measure(rng, 1 + rng.below(5), 2), b = random_measure(rng, 1 + rng.below(5), 2),
                   c = random_measure(rng, 1 + rng.below(5), 2);
        const double ab = wasserstein(a, b).distance, ba = wasserstein(b, a).distance;
        sym = std::max(sym, std::abs(ab - ba));
        tri = std::max(tri, ab - wasserstein(a, c).distance - wasserstein(c, b).distance);
        // Same measure written with a split atom and shuffled rows.
        Matrix pts;
        std::vector<double> w;
        for (std::size_t i = a.size(); i-- > 0;) {
            pts.push_row(a.point(i));
            pts.push_row(a.point(i));
            w.push_back(0.25 * a.weights()[i]);
            w.push_back(0.75 * a.weights()[i]);
        }
        self = std::max(self, wasserstein(a, DiscreteMeasure(pts, w)).distance);
        separated += !same_measure(a, b) && ab > 0.0;
    }
    for (int t = 0; t < 200; ++t) {
        const auto a = random_mom(rng, 1 + rng.below(3), 2), b = random_mom(rng, 1 + rng.below(3), 2),
                   c = random_mom(rng, 1 + rng.below(3), 2);
        const double ab = hierarchical_wasserstein(a, b).distance, ba = hierarchical_wasserstein(b, a).distance;
        sym = std::max(sym, std::abs(ab - ba));
        tri = std::max(tri, ab - hierarchical_wasserstein(a, c).distance - hierarchical_wasserstein(c, b).distance);
        // Duplicate every outer atom with split weight; the structures are unchanged.
        std::vector<DiscreteMeasure> atoms;
        std::vector<double> w;
        for (std::size_t i = 0; i < a.size(); ++i) {
            atoms.push_back(a.atom(i).merged());
            atoms.push_back(a.atom(i));
            w.push_back(0.5 * a.weights()[i]);
            w.push_back(0.5 * a.weights()[i]);
        }
        self = std::max(self, hierarchical_wasserstein(a, MeasureOfMeasures(atoms, w)).distance);
        separated += ab > 0.0;
    }
    const bool pass = sym <= 1e-9 && tri <= 1e-8 && self <= 1e-12 && separated == 400;
    return {pass, fmt("W1 and HW1 on 200 instances each: max asymmetry %.1e, max triangle excess %.1e, "
                      "max d(x, x') %.1e, %d/400 distinct pairs separated",
                      sym, tri, self, separated)};
}

Outcome hierarchical_monotonicity() {
    Rng rng(404);
    double flat = -INFINITY, order = -INFINITY;
    for (int t = 0; t < 200; ++t) {
        const auto phi = random_mom(rng, 1 + rng.below(4), 2), psi = random_mom(rng, 1 + rng.below(4), 2);
        const double hw1 = hierarchical_wasserstein(phi, psi, 1.0).distance;
        flat = std::max(flat, wasserstein(flatten(phi), flatten(psi), 1.0, Backend::exact()).distance - hw1);
        order = std::max(order, hw1 - hierarchical_wasserstein(phi, psi, 2.0).distance);
    }
    return {flat <= 1e-8 && order <= 1e-8,
            fmt("200 instances: max W1(flat) - HW1 = %.2e, max HW1 - HW2 = %.2e", flat, order)};
}

Outcome corollary_chain() {
    Rng rng(505);
    double chain = -INFINITY, footnote = -INFINITY, recompute = 0.0;
    BoundOptions o;
    o.zeta_prime = 1.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + static_cast<std::size_t>(t % 4);
        const std::size_t n = k + rng.below(6 * k);
        Matrix pts = oracle::random_points(rng, n, 2, 3.0);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i < k ? i : rng.below(k));
        const auto s = make_labeled(std::move(pts), labels, k);
        const UnlabeledDataset tgt{oracle::random_points(rng, k + rng.below(8 * k), 2, 3.0)};
        o.seed = static_cast<std::uint64_t>(t);
        const auto r = bound_corollary(s, TargetSample::unlabeled(tgt), ConstantClassifier(0), o);
        const double hw = r.value("hw_distance");
        chain = std::max(chain, hw - r.value("pairwise_sum") - r.value("iota_term"));
        footnote = std::max(footnote, hw - r.value("footnote_bound"));
        // The reported distance is the one the hierarchical solver gives for the same structures.
        const double direct =
            hierarchical_wasserstein(classes_from_labels(s).structures, bound_target_structures(tgt, k, o).structures).distance;
        recompute = std::max(recompute, std::abs(direct - hw));
    }
    return {chain <= 1e-8 && footnote <= 1e-8 && recompute <= 1e-9,
            fmt("200 structure pairs, k in 2..5: max HW1 - (pairwise + k(k-1)iota) = %.2e, max HW1 - footnote = %.2e",
                chain, footnote)};
}

Outcome pipeline_recovery() {
    int recovered = 0, worse = 0;
    std::string first_miss;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 3);
        const auto seed = static_cast<std::uint64_t>(1000 + trial);
        const auto sc = generate(ScenarioSpec::shifted_blobs(k, 2, 200, 10.0, 1.0, 4.0, 1.0, seed));
        const auto r = adapt(sc.source, drop_labels(sc.target), {.seed = seed});
        // The planted class of a cluster is the majority true label of its points.
        std::vector<std::size_t> planted(k);
        for (std::size_t l = 0; l < k; ++l) {
            std::vector<std::size_t> votes(k, 0);
            for (std::size_t i : r.target_structures.members(l)) ++votes[static_cast<std::size_t>(sc.target.labels[i])];
            planted[l] = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        }
        bool ok = r.matching.collisions.empty();
        for (std::size_t h = 0; h < k; ++h) ok = ok && planted[r.matching.sigma[h]] == h;
        if (!ok) {
            if (first_miss.empty()) first_miss = fmt(" (first miss: seed %llu)", static_cast<unsigned long long>(seed));
            continue;
        }
        ++recovered;
        const double before = 1.0 - empirical_risk(NearestNeighbor(sc.source), sc.target).value;
        const double after = 1.0 - empirical_risk(adapted_classifier(r), sc.target).value;
        worse += after < before;
    }
    return {recovered >= 99 && worse == 0,
            fmt("%d/100 trials recovered the planted matching, %d recovering trials lost 1-NN accuracy%s", recovered, worse,
                first_miss.c_str())};
}

Outcome self_adaptation() {
    int perfect = 0;
    double worst = 1.0;
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 4);
        const auto sc = generate(ScenarioSpec::shifted_blobs(k, 3, 120, 10.0, 1.0, 0.0, 0.0, 2000 + trial));
        const auto r = adapt(sc.source, drop_labels(sc.source), {.initial_centers = class_means(sc.source)});
        const double acc = 1.0 - empirical_risk(adapted_classifier(r), sc.source).value;
        worst = std::min(worst, acc);
        perfect += acc == 1.0;
    }
    return {perfect == 12, fmt("%d/12 scenarios reproduced every label, worst accuracy %.4f", perfect, worst)};
}

Outcome report_integrity() {
    int reports = 0, bad_totals = 0, bad_degenerate = 0, bad_theta = 0;
    auto audit = [&](const BoundReport& r) {
        ++reports;
        double sum = 0.0;
        for (const auto& term : r.terms) sum += term.second;
        bad_totals += !(std::abs(r.rhs_total - sum) <= 1e-9);
        // The serialized report must carry the same numbers.
        const auto back = io::bound_report_from_json(io::to_json(r));
        bad_totals += back.terms != r.terms || back.rhs_total != r.rhs_total;
    };
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t k = 2 + seed % 3;
        const auto sc = generate(ScenarioSpec::shifted_blobs(k, 2, 80, 6.0, 1.0, 2.0, 0.5, 3000 + seed));
        BoundOptions o;
        o.zeta_prime = 0.5;
        o.seed = seed;
        o.diagnostic = true;
        for (const auto& t : {TargetSample::revealed(sc.target), TargetSample::unlabeled(drop_labels(sc.target))}) {
            o.diagnostic = t.labeled.has_value();
            const NearestNeighbor h(sc.source);
            const auto u = bound_unsupervised(sc.source, t, h, o);
            audit(u);
            audit(bound_corollary(sc.source, t, h, o));
            const auto single = SourceCollection::from_sizes({sc.source}, {1.0});
            const auto pw = bound_multisource_pairwise(single, t, o);
            const auto cb = bound_multisource_combined(single, t, o);
            audit(pw);
            audit(cb);
            for (const auto* r : {&pw, &cb}) {
                bad_degenerate += r->value("hw_distance") != u.value("hw_distance");
                if (t.labeled) bad_degenerate += r->value("lambda") != u.value("lambda");
            }
            const auto ms = generate_multisource(ScenarioSpec::shifted_blobs(k, 2, 60, 6.0, 1.0, 2.0, 0.5, seed),
                                                 {Matrix(), Matrix(k, 2, 0.7)});
            const auto two = SourceCollection::from_sizes(ms.sources, {0.4, 0.6});
            audit(bound_multisource_pairwise(two, t, o));
            audit(bound_multisource_combined(two, t, o));
        }
        LabeledDataset few{Matrix(), {}, sc.target.class_names};
        for (std::size_t i = 0; i < 20; ++i) {
            few.points.push_row(sc.target.points.row(i));
            few.labels.push_back(sc.target.labels[i]);
        }
        const TargetSample semi{drop_labels(sc.target), few};
        for (double theta : {0.0, 0.3, 1.0}) {
            const auto r = bound_semisupervised(sc.source, semi, theta, 0.0, o);
            audit(r);
            if (theta == 1.0) bad_theta += r.value("divergence_block") != 0.0;
        }
    }
    return {bad_totals == 0 && bad_degenerate == 0 && bad_theta == 0,
            fmt("%d reports: %d with rhs_total != sum of terms, %d single-source mismatches, %d non-zero theta=1 blocks",
                reports, bad_totals, bad_degenerate, bad_theta)};
}

#ifndef HOTDA_CLI_PATH
#error "HOTDA_CLI_PATH must name the hotda executable"
#endif

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs the same command script in a fresh directory; returns every produced byte, keyed by file.
std::vector<std::pair<std::string, std::string>> cli_session(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = HOTDA_CLI_PATH;
    const std::string d = dir.string();
    const std::vector<std::string> commands{
        "gen --k 3 --n 120 --seed 9 --shift 3 --jitter 0.5 --out-dir " + d,
        "gen --k 3 --n 80 --seed 9 --sources 2 --out-dir " + d + "/multi",
        "ot --mu " + d + "/source.csv --nu " + d + "/target.csv --plan " + d + "/plan.csv",
        "ot --mu " + d + "/source.csv --nu " + d + "/target.csv --backend sinkhorn --epsilon auto",
        "hw --source " + d + "/source.csv --target " + d + "/target.csv --p 2",
        "adapt --source " + d + "/source.csv --target " + d + "/target.csv --seed 9 --out-dir " + d + "/adapt",
        "bound --mode unsupervised --source " + d + "/source.csv --target " + d + "/target.csv --zeta-prime 1 --seed 9 --diagnostic",
        "bound --mode corollary --source " + d + "/source.csv --target " + d + "/target.csv --zeta-prime 1 --seed 9 --out " + d + "/cor.json",
        "bound --mode multi-combined --source " + d + "/multi/source_1.csv --source " + d + "/multi/source_2.csv --target " + d +
            "/multi/target.csv --zeta-prime 1 --theta 0.5,0.5 --seed 9",
    };
    for (std::size_t i = 0; i < commands.size(); ++i) {
        const std::string log = d + "/stdout_" + std::to_string(i) + ".txt";
        const std::string line = "\"" + cli + "\" " + commands[i] + " > \"" + log + "\" 2>&1; echo $? >> \"" + log + "\"";
        if (std::system(line.c_str()) != 0) break;
    }
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
    std::sort(files.begin(), files.end());
    return files;
}

Outcome cli_determinism() {
    const fs::path base = fs::temp_directory_path() / "hotda_acceptance_determinism";
    const auto first = cli_session(base / "run");
    const auto second = cli_session(base / "run");
    fs::remove_all(base);
    std::size_t bytes = 0, failed = 0;
    for (const auto& [name, text] : first) {
        bytes += text.size();
        // Every command's log ends in its exit status.
        if (name.rfind("stdout_", 0) == 0 && text.size() >= 2 && text.substr(text.size() - 2) != "0\n") ++failed;
    }
    const bool same = first == second;
    return {same && failed == 0 && first.size() >= 15,
            fmt("%zu files (%zu bytes) per run, %s, %zu commands failed", first.size(), bytes,
                same ? "byte-identical" : "outputs differ", failed)};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"exact solver equals permutation brute force", exact_vs_permutations},
        {"sinkhorn converges at epsilon = 1e-3 max(C)", sinkhorn_convergence},
        {"metric axioms for W1 and HW1", metric_axioms},
        {"flattened W1 <= HW1 <= HW2", hierarchical_monotonicity},
        {"corollary chain and footnote bound", corollary_chain},
        {"pipeline recovers planted matchings", pipeline_recovery},
        {"self-adaptation reproduces labels", self_adaptation},
        {"bound report integrity", report_integrity},
        {"byte-identical CLI reruns", cli_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
