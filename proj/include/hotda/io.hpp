#pragma once

#include "hotda/bounds.hpp"
#include "hotda/pipeline.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// CSV layout: a header row, then one row per point. Feature columns are numeric. A final
// column is read as the label when its header is "label", "class" or "y", or when any of its
// values is not a number. Measure files may instead carry a "weight" column.

namespace hotda::io {

struct PointTable {
    std::vector<std::string> header;
    Matrix points;
    /// Raw label strings, when the file has a label column.
    std::optional<std::vector<std::string>> labels;
    /// Per-row weights, when the file has a "weight" column.
    std::optional<std::vector<double>> weights;
};

PointTable parse_points(std::istream& in, const std::string& source_name = "<stream>");
PointTable read_points(const std::string& path);

/// Labeled dataset; throws IoError when the file has no label column.
LabeledDataset read_labeled(const std::string& path);
/// Points only; a label column, if present, is ignored.
UnlabeledDataset read_unlabeled(const std::string& path);
/// Weighted measure; uniform weights unless the file has a "weight" column.
DiscreteMeasure read_measure(const std::string& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

void write_points(std::ostream& out, const Matrix& points, const std::vector<std::string>* labels = nullptr);
void write_labeled(std::ostream& out, const LabeledDataset& s);
void write_matrix(std::ostream& out, const Matrix& m);
/// Writes via a temporary file in the same directory, so readers never see a partial file.
void write_file(const std::string& path, const std::string& contents);

std::string to_json(const BoundReport& report);
BoundReport bound_report_from_json(const std::string& text);
std::string to_json(const Matching& matching, const AdaptResult* result = nullptr);

} // namespace hotda::io
