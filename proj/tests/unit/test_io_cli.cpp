#include "hotda/cli.hpp"
#include "hotda/datagen.hpp"
#include "hotda/error.hpp"
#include "hotda/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

using namespace hotda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("hotda_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

io::PointTable parse(const std::string& text) {
    std::istringstream in(text);
    return io::parse_points(in);
}

} // namespace

TEST_CASE("CSV label column detection") {
    const auto named = parse("x1,x2,label\n0,1,3\n2,3,4\n");
    REQUIRE(named.labels);
    CHECK(named.points.cols() == 2);
    CHECK((*named.labels)[1] == "4");

    const auto text = parse("a,b\n0.5,cat\n1.5,dog\n");
    REQUIRE(text.labels);
    CHECK(text.points.cols() == 1);

    const auto plain = parse("a,b\n0.5,1\n1.5,2\n");
    CHECK_FALSE(plain.labels);
    CHECK(plain.points.cols() == 2);

    const auto weighted = parse("x,weight\n0,1\n1,3\n");
    REQUIRE(weighted.weights);
    CHECK((*weighted.weights)[1] == 3.0);

    CHECK_THROWS_AS(parse(""), IoError);
    CHECK_THROWS_AS(parse("x\n"), IoError);
    CHECK_THROWS_AS(parse("x,y\n1,2\n3\n"), IoError);
    CHECK_THROWS_AS(parse("x,y,label\n1,zz,a\n"), IoError);
}

TEST_CASE("numbers and datasets round-trip through text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 0.0})
        CHECK(std::stod(io::format_number(v)) == v);
    const auto sc = generate(ScenarioSpec::shifted_blobs(3, 2, 20, 4.0, 1.0, 1.0, 0.1, 2));
    std::ostringstream os;
    io::write_labeled(os, sc.source);
    std::istringstream in(os.str());
    const auto t = io::parse_points(in);
    CHECK(t.points == sc.source.points);
    const auto back = make_labeled(t.points, *t.labels);
    CHECK(back.labels == sc.source.labels);
}

TEST_CASE("bound report JSON round trip") {
    BoundReport r;
    r.kind = BoundKind::multi_combined;
    r.terms = {{"a", 0.1}, {"b", 1.0 / 3.0}};
    r.components = {{"hw_distance", 2.0}};
    r.pool = {"1nn(S)"};
    r.hypothesis = "1nn(S)";
    r.rhs_total = r.sum_terms();
    r.lhs_target_risk = 0.05;
    r.satisfied = true;
    r.delta = 0.1;
    r.zeta_prime = 0.5;
    r.k = 3;
    r.theta = {0.4, 0.6};
    r.vartheta = {0.5, 0.5};
    r.seed = 77;
    const std::string text = io::to_json(r);
    const auto back = io::bound_report_from_json(text);
    CHECK(io::to_json(back) == text);
    CHECK(back.terms == r.terms);
    CHECK(back.theta == r.theta);
    CHECK(*back.satisfied);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["kind"] == "multi-combined");
    CHECK_THROWS_AS(io::bound_report_from_json("{\"kind\": \"nope\"}"), IoError);
    CHECK_THROWS_AS(io::bound_report_from_json("not json"), IoError);
}

TEST_CASE("cli exit codes") {
    TempDir dir("codes");
    CHECK(run({}).code == cli::usage);
    CHECK(run({"--help"}).code == cli::ok);
    CHECK(run({"ot", "--mu", "x"}).code == cli::usage);
    CHECK(run({"ot", "--mu", dir / "missing.csv", "--nu", dir / "missing.csv"}).code == cli::data);

    spit(dir / "mu.csv", "x1,x2\n0,0\n1,0\n");
    spit(dir / "nu.csv", "x1,x2\n0,1\n1,1\n");
    const auto ok = run({"ot", "--mu", dir / "mu.csv", "--nu", dir / "nu.csv"});
    CHECK(ok.code == cli::ok);
    CHECK(ok.out == "1\n");
    CHECK(run({"ot", "--mu", dir / "mu.csv", "--nu", dir / "nu.csv", "--epsilon", "-1"}).code == cli::usage);
    CHECK(run({"ot", "--mu", dir / "mu.csv", "--nu", dir / "nu.csv", "--p", "0.5"}).code == cli::usage);

    spit(dir / "line.csv", "x\n0\n");
    CHECK(run({"ot", "--mu", dir / "mu.csv", "--nu", dir / "line.csv"}).code == cli::data);
}

TEST_CASE("cli bound requires zeta prime and names it") {
    TempDir dir("zeta");
    REQUIRE(run({"gen", "--k", "2", "--n", "30", "--out-dir", dir.path.string()}).code == cli::ok);
    const auto r = run({"bound", "--mode", "unsupervised", "--source", dir / "source.csv", "--target", dir / "target.csv"});
    CHECK(r.code == cli::usage);
    CHECK(r.err.find("zeta") != std::string::npos);

    const auto good = run({"bound", "--mode", "unsupervised", "--source", dir / "source.csv", "--target", dir / "target.csv",
                           "--zeta-prime", "1", "--diagnostic"});
    REQUIRE(good.code == cli::ok);
    const auto report = io::bound_report_from_json(good.out);
    CHECK(report.kind == BoundKind::unsupervised);
    CHECK(report.satisfied.has_value());
}

TEST_CASE("cli adapt writes its outputs deterministically") {
    TempDir dir("adapt");
    REQUIRE(run({"gen", "--k", "3", "--n", "60", "--seed", "5", "--out-dir", dir.path.string()}).code == cli::ok);
    std::string first[3];
    for (int pass = 0; pass < 2; ++pass) {
        const auto r = run({"adapt", "--source", dir / "source.csv", "--target", dir / "target.csv", "--seed", "5",
                            "--out-dir", dir / "out"});
        REQUIRE(r.code == cli::ok);
        CHECK(r.out.find("matched 3 classes to 3 clusters") == 0);
        const std::string files[3] = {"transported.csv", "matching.json", "predictions.csv"};
        for (int f = 0; f < 3; ++f) {
            const std::string text = slurp(dir / ("out/" + files[f]));
            CHECK_FALSE(text.empty());
            if (pass == 0) first[f] = text;
            else CHECK(text == first[f]);
        }
    }
    const auto j = nlohmann::json::parse(slurp(dir / "out/matching.json"));
    CHECK(j["sigma"].size() == 3);
}

TEST_CASE("cli hw on labeled files") {
    TempDir dir("hw");
    spit(dir / "s.csv", "x,label\n0,a\n1,a\n10,b\n");
    const auto same = run({"hw", "--source", dir / "s.csv", "--target", dir / "s.csv"});
    REQUIRE(same.code == cli::ok);
    CHECK(same.out == "0\n");
    spit(dir / "t.csv", "x\n0\n1\n10\n");
    // Unlabeled source needs an explicit cluster count; the target defaults to the class count.
    CHECK(run({"hw", "--source", dir / "t.csv", "--target", dir / "s.csv"}).code == cli::usage);
    CHECK(run({"hw", "--source", dir / "s.csv", "--target", dir / "t.csv", "--k", "2"}).code == cli::ok);
}
