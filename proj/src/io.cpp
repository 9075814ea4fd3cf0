#include "hotda/io.hpp"

#include "hotda/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hotda::io {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void fail(const std::string& where, std::size_t line, const std::string& what) {
    throw IoError(where + ":" + std::to_string(line) + ": " + what);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

PointTable parse_points(std::istream& in, const std::string& where) {
    PointTable t;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (t.header.empty()) {
            t.header = split_row(line);
            continue;
        }
        auto cells = split_row(line);
        if (cells.size() != t.header.size())
            fail(where, line_no, "expected " + std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw IoError(where + ": missing header row");
    if (rows.empty()) throw IoError(where + ": no data rows");

    const std::size_t cols = t.header.size();
    std::optional<std::size_t> weight_col, label_col;
    for (std::size_t c = 0; c < cols; ++c)
        if (lower(t.header[c]) == "weight") weight_col = c;
    const std::size_t last = cols - 1;
    if (weight_col != last) {
        const std::string name = lower(t.header[last]);
        bool label = name == "label" || name == "class" || name == "y";
        for (std::size_t r = 0; r < rows.size() && !label; ++r) label = !parse_double(rows[r][last]).has_value();
        if (label) label_col = last;
    }

    std::vector<std::size_t> features;
    for (std::size_t c = 0; c < cols; ++c)
        if (c != weight_col && c != label_col) features.push_back(c);
    if (features.empty()) throw IoError(where + ": no feature columns");

    t.points = Matrix(rows.size(), features.size());
    if (label_col) t.labels.emplace();
    if (weight_col) t.weights.emplace();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t f = 0; f < features.size(); ++f) {
            const auto v = parse_double(rows[r][features[f]]);
            if (!v) fail(where, r + 2, "column '" + t.header[features[f]] + "' is not a finite number: '" + rows[r][features[f]] + "'");
            t.points(r, f) = *v;
        }
        if (label_col) {
            if (rows[r][*label_col].empty()) fail(where, r + 2, "empty label");
            t.labels->push_back(rows[r][*label_col]);
        }
        if (weight_col) {
            const auto w = parse_double(rows[r][*weight_col]);
            if (!w || *w < 0.0) fail(where, r + 2, "weight must be a non-negative number");
            t.weights->push_back(*w);
        }
    }
    return t;
}

PointTable read_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_points(in, path);
}

LabeledDataset read_labeled(const std::string& path) {
    PointTable t = read_points(path);
    if (!t.labels) throw IoError(path + ": no label column (last column must be named label, class or y)");
    return make_labeled(std::move(t.points), *t.labels);
}

UnlabeledDataset read_unlabeled(const std::string& path) { return UnlabeledDataset{read_points(path).points}; }

DiscreteMeasure read_measure(const std::string& path) {
    PointTable t = read_points(path);
    if (!t.weights) return DiscreteMeasure::uniform(std::move(t.points));
    double total = 0.0;
    for (double w : *t.weights) total += w;
    if (!(total > 0.0)) throw IoError(path + ": weights sum to zero");
    // Weight columns written by hand rarely sum to exactly one.
    for (double& w : *t.weights) w /= total;
    return DiscreteMeasure(std::move(t.points), std::move(*t.weights));
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw IoError("cannot format number");
    return std::string(buf, ptr);
}

void write_points(std::ostream& out, const Matrix& points, const std::vector<std::string>* labels) {
    for (std::size_t c = 0; c < points.cols(); ++c) out << (c ? "," : "") << "x" << c + 1;
    if (labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t c = 0; c < points.cols(); ++c) out << (c ? "," : "") << format_number(points(i, c));
        if (labels) out << ',' << quote_if_needed((*labels)[i]);
        out << '\n';
    }
}

void write_labeled(std::ostream& out, const LabeledDataset& s) {
    std::vector<std::string> names;
    names.reserve(s.size());
    for (int l : s.labels) names.push_back(s.class_names[static_cast<std::size_t>(l)]);
    write_points(out, s.points, &names);
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
        out << '\n';
    }
}

void write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << contents;
        out.flush();
        if (!out) throw IoError("failed writing '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move '" + tmp + "' into place");
    }
}

namespace {

ordered_json named(const NamedValues& values) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : values) j[k] = v;
    return j;
}

NamedValues unnamed(const ordered_json& j) {
    NamedValues out;
    for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), it.value().get<double>());
    return out;
}

ordered_json matrix_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
}

} // namespace

std::string to_json(const BoundReport& r) {
    ordered_json j;
    j["kind"] = to_string(r.kind);
    j["hypothesis"] = r.hypothesis;
    j["terms"] = named(r.terms);
    j["components"] = named(r.components);
    j["pool"] = r.pool;
    j["rhs_total"] = r.rhs_total;
    if (r.lhs_target_risk) j["lhs_target_risk"] = *r.lhs_target_risk;
    if (r.satisfied) j["satisfied"] = *r.satisfied;
    ordered_json p;
    p["delta"] = r.delta;
    p["zeta_prime"] = r.zeta_prime;
    p["K"] = r.K;
    p["k"] = r.k;
    if (!r.theta.empty()) p["theta"] = r.theta;
    if (!r.vartheta.empty()) p["vartheta"] = r.vartheta;
    j["params"] = p;
    j["provenance"] = {{"seed", r.seed}, {"backend", r.backend}, {"epsilon", r.epsilon}};
    return j.dump(2) + "\n";
}

BoundReport bound_report_from_json(const std::string& text) {
    try {
        const ordered_json j = ordered_json::parse(text);
        BoundReport r;
        const std::string kind = j.at("kind").get<std::string>();
        bool known = false;
        for (BoundKind k : {BoundKind::unsupervised, BoundKind::corollary, BoundKind::semi_supervised, BoundKind::multi_pairwise,
                            BoundKind::multi_combined})
            if (to_string(k) == kind) {
                r.kind = k;
                known = true;
            }
        if (!known) throw IoError("unknown report kind '" + kind + "'");
        r.hypothesis = j.value("hypothesis", std::string());
        r.terms = unnamed(j.at("terms"));
        if (j.contains("components")) r.components = unnamed(j.at("components"));
        if (j.contains("pool")) r.pool = j.at("pool").get<std::vector<std::string>>();
        r.rhs_total = j.at("rhs_total").get<double>();
        if (j.contains("lhs_target_risk")) r.lhs_target_risk = j.at("lhs_target_risk").get<double>();
        if (j.contains("satisfied")) r.satisfied = j.at("satisfied").get<bool>();
        const auto& p = j.at("params");
        r.delta = p.at("delta").get<double>();
        r.zeta_prime = p.at("zeta_prime").get<double>();
        r.K = p.at("K").get<double>();
        r.k = p.at("k").get<std::size_t>();
        if (p.contains("theta")) r.theta = p.at("theta").get<std::vector<double>>();
        if (p.contains("vartheta")) r.vartheta = p.at("vartheta").get<std::vector<double>>();
        const auto& prov = j.at("provenance");
        r.seed = prov.at("seed").get<std::uint64_t>();
        r.backend = prov.at("backend").get<std::string>();
        r.epsilon = prov.at("epsilon").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed bound report: ") + e.what());
    }
}

std::string to_json(const Matching& m, const AdaptResult* result) {
    ordered_json j;
    j["epsilon"] = m.epsilon;
    j["sigma"] = m.sigma;
    j["ties"] = m.tie_rows;
    j["collisions"] = m.collisions;
    j["outer_plan"] = matrix_json(m.outer_plan.coupling);
    j["structure_cost"] = matrix_json(m.cost);
    j["objective"] = m.outer_plan.objective;
    j["marginal_violation"] = m.outer_plan.marginal_violation;
    j["solver"] = {{"method", to_string(m.outer_plan.info.method)},
                   {"iterations", m.outer_plan.info.iterations},
                   {"converged", m.outer_plan.info.converged}};
    if (result) {
        ordered_json pairs = ordered_json::array();
        const auto& names = result->transported.class_names;
        for (std::size_t h = 0; h < m.sigma.size(); ++h)
            pairs.push_back({{"class", h < names.size() ? names[h] : std::to_string(h)}, {"cluster", m.sigma[h]}});
        j["pairs"] = pairs;
        j["cluster_sizes"] = [&] {
            std::vector<std::size_t> sizes(result->target_structures.structures.size(), 0);
            for (std::size_t c : result->target_structures.membership) ++sizes[c];
            return sizes;
        }();
    }
    return j.dump(2) + "\n";
}

} // namespace hotda::io
