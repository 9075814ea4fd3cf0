#include "hotda/cli.hpp"

#include "hotda/bounds.hpp"
#include "hotda/datagen.hpp"
#include "hotda/error.hpp"
#include "hotda/io.hpp"
#include "hotda/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <memory>
#include <ostream>
#include <sstream>

namespace hotda::cli {

namespace {

/// Thrown for semantic usage errors found after parsing (exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "auto" -> 0 (the library's auto marker), otherwise a positive number.
double parse_epsilon(const std::string& text, const char* flag) {
    if (text == "auto") return 0.0;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v > 0.0 && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string(flag) + " must be 'auto' or a positive number, got '" + text + "'");
}

Backend parse_backend(const std::string& kind, const std::string& epsilon) {
    Backend b;
    if (kind == "exact") b = Backend::exact();
    else if (kind == "sinkhorn") b = Backend::sinkhorn();
    else b = Backend::automatic();
    b.epsilon = parse_epsilon(epsilon, "--epsilon");
    return b;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
        }
    }
    return out;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") out << text;
    else io::write_file(path, text);
}

/// Structures of one side of an hw query: classes when the file is labeled, k-means otherwise.
MeasureOfMeasures side_structures(const std::string& path, std::size_t k, std::uint64_t seed, std::size_t& k_out) {
    io::PointTable t = io::read_points(path);
    if (t.labels) {
        const auto s = make_labeled(std::move(t.points), *t.labels);
        k_out = s.num_classes();
        return classes_from_labels(s).structures;
    }
    if (k == 0) throw UsageError(path + " has no labels; pass --k to cluster it");
    k_out = k;
    return clusters_kmeans(UnlabeledDataset{std::move(t.points)}, k, seed).structures;
}

// ---- ot -------------------------------------------------------------------------------

struct OtArgs {
    std::string mu, nu, backend = "auto", epsilon = "auto", plan;
    double p = 1.0;
    bool verbose = false;
};

void cmd_ot(const OtArgs& a, std::ostream& out, std::ostream& err) {
    const DiscreteMeasure mu = io::read_measure(a.mu);
    const DiscreteMeasure nu = io::read_measure(a.nu);
    const WassersteinResult r = wasserstein(mu, nu, a.p, parse_backend(a.backend, a.epsilon));
    out << io::format_number(r.distance) << '\n';
    if (a.verbose)
        err << "backend " << to_string(r.backend) << ", epsilon " << r.epsilon << ", iterations " << r.plan.info.iterations
            << ", marginal violation " << r.plan.marginal_violation << '\n';
    if (!a.plan.empty()) {
        std::ostringstream os;
        io::write_matrix(os, r.plan.coupling);
        io::write_file(a.plan, os.str());
    }
}

// ---- hw -------------------------------------------------------------------------------

struct HwArgs {
    std::string source, target, inner = "exact", outer = "exact", epsilon = "auto";
    double p = 1.0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool literal = false;
};

void cmd_hw(const HwArgs& a, std::ostream& out) {
    std::size_t ks = 0, kt = 0;
    const MeasureOfMeasures phi = side_structures(a.source, a.k, a.seed, ks);
    const MeasureOfMeasures psi = side_structures(a.target, a.k ? a.k : ks, a.seed, kt);
    const auto r = hierarchical_wasserstein(phi, psi, a.p, parse_backend(a.inner, a.epsilon), parse_backend(a.outer, "auto"),
                                            a.literal ? OuterCost::literal : OuterCost::power);
    out << io::format_number(r.distance) << '\n';
}

// ---- adapt ----------------------------------------------------------------------------

struct AdaptArgs {
    std::string source, target, out_dir = ".", epsilon = "auto", epsilon_prime = "auto";
    std::size_t k = 0, restarts = 10;
    std::uint64_t seed = 0;
    double p = 2.0;
    bool proportional = false, init_class_means = false;
};

void cmd_adapt(const AdaptArgs& a, std::ostream& out) {
    const LabeledDataset s = io::read_labeled(a.source);
    const UnlabeledDataset t = io::read_unlabeled(a.target);
    AdaptConfig cfg;
    cfg.k = a.k;
    cfg.seed = a.seed;
    cfg.restarts = a.restarts;
    cfg.match.p = a.p;
    cfg.match.epsilon = parse_epsilon(a.epsilon, "--epsilon");
    cfg.epsilon_prime = parse_epsilon(a.epsilon_prime, "--epsilon-prime");
    cfg.outer_weights = a.proportional ? OuterWeights::proportional : OuterWeights::uniform;
    if (a.init_class_means) cfg.initial_centers = class_means(s);

    const AdaptResult r = adapt(s, t, cfg);
    const auto predicted = adapted_classifier(r).predict_all(t.points);

    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    std::ostringstream transported, predictions;
    io::write_labeled(transported, r.transported.as_labeled());
    std::vector<std::string> names;
    for (int l : predicted) names.push_back(s.class_names[static_cast<std::size_t>(l)]);
    io::write_points(predictions, t.points, &names);
    io::write_file((dir / "transported.csv").string(), transported.str());
    io::write_file((dir / "matching.json").string(), io::to_json(r.matching, &r));
    io::write_file((dir / "predictions.csv").string(), predictions.str());

    out << "matched " << r.matching.sigma.size() << " classes to " << r.target_structures.structures.size() << " clusters";
    if (!r.matching.collisions.empty()) out << " (" << r.matching.collisions.size() << " clusters claimed twice)";
    if (!r.matching.tie_rows.empty()) out << " (" << r.matching.tie_rows.size() << " tied rows)";
    out << '\n';
}

// ---- bound ----------------------------------------------------------------------------

struct BoundArgs {
    std::string mode = "unsupervised", target, target_labeled, theta, vartheta, out, hypothesis = "1nn";
    std::vector<std::string> sources;
    std::optional<double> zeta_prime;
    double delta = 0.05, K = 1.0;
    std::size_t k = 0, restarts = 10;
    std::uint64_t seed = 0;
    bool diagnostic = false;
};

void cmd_bound(const BoundArgs& a, std::ostream& out) {
    if (!a.zeta_prime)
        throw UsageError("--zeta-prime is required: the concentration term depends on the constant zeta' of the "
                         "T1 transport inequality, which the theory proves exists but never specifies");
    BoundOptions o;
    o.delta = a.delta;
    o.zeta_prime = *a.zeta_prime;
    o.K = a.K;
    o.k = a.k;
    o.seed = a.seed;
    o.restarts = a.restarts;
    o.diagnostic = a.diagnostic;

    io::PointTable tt = io::read_points(a.target);
    TargetSample t{UnlabeledDataset{tt.points}, std::nullopt};
    const bool multi = a.mode == "multi-pairwise" || a.mode == "multi-combined";
    if (a.mode == "semi") {
        if (!a.target_labeled.empty()) t.labeled = io::read_labeled(a.target_labeled);
    } else if (tt.labels) {
        t.labeled = make_labeled(tt.points, *tt.labels);
    }
    if (!multi && a.sources.size() != 1) throw UsageError("--source must be given exactly once for mode " + a.mode);

    BoundReport r;
    if (multi) {
        std::vector<LabeledDataset> srcs;
        for (const auto& p : a.sources) srcs.push_back(io::read_labeled(p));
        std::vector<double> theta = a.theta.empty() ? std::vector<double>(srcs.size(), 1.0 / static_cast<double>(srcs.size()))
                                                    : parse_list(a.theta, "--theta");
        SourceCollection c = SourceCollection::from_sizes(std::move(srcs), std::move(theta));
        if (!a.vartheta.empty()) {
            c.vartheta = parse_list(a.vartheta, "--vartheta");
            c.validate();
        }
        r = a.mode == "multi-pairwise" ? bound_multisource_pairwise(c, t, o) : bound_multisource_combined(c, t, o);
    } else {
        const LabeledDataset s = io::read_labeled(a.sources.front());
        if (a.mode == "semi") {
            const std::vector<double> theta = a.theta.empty() ? std::vector<double>{0.5} : parse_list(a.theta, "--theta");
            const std::vector<double> vt = a.vartheta.empty() ? std::vector<double>{0.0} : parse_list(a.vartheta, "--vartheta");
            if (theta.size() != 1 || vt.size() != 1) throw UsageError("semi mode takes a single --theta and --vartheta");
            r = bound_semisupervised(s, t, theta[0], vt[0], o);
        } else {
            std::unique_ptr<Classifier> h;
            if (a.hypothesis == "1nn") h = std::make_unique<NearestNeighbor>(s, "1nn(S)");
            else if (a.hypothesis == "centroid") h = std::make_unique<NearestCentroid>(s, "centroid(S)");
            else {
                AdaptConfig cfg;
                cfg.k = a.k;
                cfg.seed = a.seed;
                cfg.restarts = a.restarts;
                h = std::make_unique<NearestNeighbor>(adapted_classifier(adapt(s, t.points, cfg)));
            }
            r = a.mode == "corollary" ? bound_corollary(s, t, *h, o) : bound_unsupervised(s, t, *h, o);
        }
    }
    emit(a.out, io::to_json(r), out);
}

// ---- gen ------------------------------------------------------------------------------

struct GenArgs {
    std::size_t k = 3, d = 2, n = 200, sources = 1;
    double separation = 10.0, spread = 1.0, shift = 3.0, jitter = 0.0, source_spacing = 1.0;
    std::uint64_t seed = 0;
    bool swap = false;
    std::string out_dir = ".";
};

void cmd_gen(const GenArgs& a, std::ostream& out) {
    ScenarioSpec spec = ScenarioSpec::shifted_blobs(a.k, a.d, a.n, a.separation, a.spread, a.shift, a.jitter, a.seed);
    if (a.swap) {
        if (a.k < 2) throw UsageError("--swap needs k >= 2");
        std::vector<std::size_t> perm(a.k);
        for (std::size_t c = 0; c < a.k; ++c) perm[c] = c;
        std::swap(perm[0], perm[1]);
        spec.label_permutation = perm;
    }
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    auto save = [&](const std::string& name, const LabeledDataset& s) {
        std::ostringstream os;
        io::write_labeled(os, s);
        io::write_file((dir / name).string(), os.str());
        out << "wrote " << (dir / name).string() << " (" << s.size() << " points)\n";
    };
    if (a.sources <= 1) {
        const Scenario sc = generate(spec);
        save("source.csv", sc.source);
        save("target.csv", sc.target);
        return;
    }
    std::vector<Matrix> offsets;
    for (std::size_t j = 0; j < a.sources; ++j) {
        Matrix off(a.k, a.d, 0.0);
        for (std::size_t c = 0; c < a.k; ++c) off(c, 0) = a.source_spacing * static_cast<double>(j);
        offsets.push_back(off);
    }
    const MultiScenario m = generate_multisource(spec, offsets);
    for (std::size_t j = 0; j < m.sources.size(); ++j) save("source_" + std::to_string(j + 1) + ".csv", m.sources[j]);
    save("target.csv", m.target);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical optimal transport for domain adaptation", "hotda"};
    app.require_subcommand(1);

    OtArgs ot;
    auto* c_ot = app.add_subcommand("ot", "Wasserstein distance between two weighted point sets");
    c_ot->add_option("--mu", ot.mu, "First measure (CSV)")->required();
    c_ot->add_option("--nu", ot.nu, "Second measure (CSV)")->required();
    c_ot->add_option("--p", ot.p, "Order p >= 1")->check(CLI::Range(1.0, 1e6));
    c_ot->add_option("--backend", ot.backend)->check(CLI::IsMember({"exact", "sinkhorn", "auto"}));
    c_ot->add_option("--epsilon", ot.epsilon, "Sinkhorn regularization or 'auto'");
    c_ot->add_option("--plan", ot.plan, "Write the coupling to this CSV");
    c_ot->add_flag("--verbose", ot.verbose);

    HwArgs hw;
    auto* c_hw = app.add_subcommand("hw", "Hierarchical Wasserstein distance between structured datasets");
    c_hw->add_option("--source", hw.source, "Labeled CSV, or unlabeled with --k")->required();
    c_hw->add_option("--target", hw.target, "Labeled CSV, or unlabeled (clustered)")->required();
    c_hw->add_option("--p", hw.p)->check(CLI::Range(1.0, 1e6));
    c_hw->add_option("--k", hw.k, "Cluster count for unlabeled files");
    c_hw->add_option("--seed", hw.seed);
    c_hw->add_option("--inner", hw.inner)->check(CLI::IsMember({"exact", "sinkhorn", "auto"}));
    c_hw->add_option("--outer", hw.outer)->check(CLI::IsMember({"exact", "sinkhorn", "auto"}));
    c_hw->add_option("--epsilon", hw.epsilon, "Inner Sinkhorn regularization or 'auto'");
    c_hw->add_flag("--literal", hw.literal, "Use W_p itself as the outer cost");

    AdaptArgs ad;
    auto* c_ad = app.add_subcommand("adapt", "Match classes to target clusters and transport the source");
    c_ad->add_option("--source", ad.source, "Labeled source CSV")->required();
    c_ad->add_option("--target", ad.target, "Target CSV (labels ignored)")->required();
    c_ad->add_option("--out-dir", ad.out_dir);
    c_ad->add_option("--k", ad.k, "Target clusters (default: number of classes)");
    c_ad->add_option("--seed", ad.seed);
    c_ad->add_option("--restarts", ad.restarts)->check(CLI::PositiveNumber);
    c_ad->add_option("--p", ad.p, "Order of the structure-level distances")->check(CLI::Range(1.0, 1e6));
    c_ad->add_option("--epsilon", ad.epsilon, "Structure matching regularization or 'auto'");
    c_ad->add_option("--epsilon-prime", ad.epsilon_prime, "Barycentric mapping regularization or 'auto'");
    c_ad->add_flag("--proportional", ad.proportional, "Weight structures by size instead of uniformly");
    c_ad->add_flag("--init-class-means", ad.init_class_means, "Start clustering from the source class means");

    BoundArgs bd;
    auto* c_bd = app.add_subcommand("bound", "Evaluate a generalization bound and write it as JSON");
    c_bd->add_option("--mode", bd.mode)
        ->check(CLI::IsMember({"unsupervised", "corollary", "semi", "multi-pairwise", "multi-combined"}));
    c_bd->add_option("--source", bd.sources, "Labeled source CSV (repeat for multi-source)")->required();
    c_bd->add_option("--target", bd.target, "Target CSV; labels, if present, feed lambda and diagnostics")->required();
    c_bd->add_option("--target-labeled", bd.target_labeled, "Labeled target subset (semi mode)");
    c_bd->add_option("--zeta-prime", bd.zeta_prime, "Transport-inequality constant zeta' > 0");
    c_bd->add_option("--delta", bd.delta, "Confidence parameter in (0, 1)");
    c_bd->add_option("--K", bd.K, "Kernel bound");
    c_bd->add_option("--k", bd.k, "Target clusters");
    c_bd->add_option("--seed", bd.seed);
    c_bd->add_option("--restarts", bd.restarts)->check(CLI::PositiveNumber);
    c_bd->add_option("--theta", bd.theta, "Weight(s), comma separated");
    c_bd->add_option("--vartheta", bd.vartheta, "Sample share(s), comma separated");
    c_bd->add_option("--hypothesis", bd.hypothesis)->check(CLI::IsMember({"1nn", "centroid", "adapted"}));
    c_bd->add_option("--out", bd.out, "Output file (default stdout)");
    c_bd->add_flag("--diagnostic", bd.diagnostic, "Record the target risk and whether the bound held");

    GenArgs gn;
    auto* c_gn = app.add_subcommand("gen", "Generate a shifted Gaussian-blob scenario");
    c_gn->add_option("--k", gn.k)->check(CLI::PositiveNumber);
    c_gn->add_option("--d", gn.d)->check(CLI::PositiveNumber);
    c_gn->add_option("--n", gn.n, "Points per domain");
    c_gn->add_option("--separation", gn.separation);
    c_gn->add_option("--spread", gn.spread);
    c_gn->add_option("--shift", gn.shift, "Length of the common target shift");
    c_gn->add_option("--jitter", gn.jitter, "Per-class variation of the shift");
    c_gn->add_option("--sources", gn.sources, "Number of source domains");
    c_gn->add_option("--source-spacing", gn.source_spacing, "Offset between consecutive sources");
    c_gn->add_option("--seed", gn.seed);
    c_gn->add_flag("--swap", gn.swap, "Swap the identities of classes 0 and 1 in the target");
    c_gn->add_option("--out-dir", gn.out_dir);

    std::vector<std::string> argv_store{"hotda"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_store) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (c_ot->parsed()) cmd_ot(ot, out, err);
        else if (c_hw->parsed()) cmd_hw(hw, out);
        else if (c_ad->parsed()) cmd_adapt(ad, out);
        else if (c_bd->parsed()) cmd_bound(bd, out);
        else if (c_gn->parsed()) cmd_gen(gn, out);
        return ok;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << '\n';
        return data;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return data;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return data;
    }
}

} // namespace hotda::cli
