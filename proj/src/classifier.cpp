#include "hotda/classifier.hpp"

#include "hotda/error.hpp"
#include "hotda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hotda {

std::vector<int> Classifier::predict_all(const Matrix& points) const {
    std::vector<int> out;
    out.reserve(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) out.push_back(predict(points.row(i)));
    return out;
}

NearestNeighbor::NearestNeighbor(const Matrix& train, std::vector<int> labels, std::string name)
    : train_t_(train.transposed()), labels_(std::move(labels)), name_(std::move(name)) {
    detail::require(train.rows() >= 1, "NearestNeighbor: empty training set");
    detail::require(train.rows() == labels_.size(), "NearestNeighbor: points and labels differ in length");
}

NearestNeighbor::NearestNeighbor(const LabeledDataset& s, std::string name) : NearestNeighbor(s.points, s.labels, std::move(name)) {}

int NearestNeighbor::predict(std::span<const double> x) const {
    detail::require(x.size() == train_t_.rows(), "NearestNeighbor: dimension mismatch");
    std::vector<double> dist(labels_.size());
    kernels::squared_distances(x, train_t_.data(), labels_.size(), dist);
    const auto best = std::min_element(dist.begin(), dist.end());
    return labels_[static_cast<std::size_t>(best - dist.begin())];
}

NearestCentroid::NearestCentroid(const LabeledDataset& s, std::string name) : name_(std::move(name)) {
    s.validate();
    detail::require(s.size() >= 1, "NearestCentroid: empty training set");
    Matrix sums(s.num_classes(), s.dim(), 0.0);
    std::vector<double> counts(s.num_classes(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        kernels::axpy(1.0, s.points.row(i), sums.row(static_cast<std::size_t>(s.labels[i])));
        counts[static_cast<std::size_t>(s.labels[i])] += 1.0;
    }
    // Classes absent from the training data get no centroid.
    for (std::size_t c = 0; c < s.num_classes(); ++c) {
        if (counts[c] == 0.0) continue;
        for (double& v : sums.row(c)) v /= counts[c];
        centroids_.push_row(sums.row(c));
        classes_.push_back(static_cast<int>(c));
    }
}

int NearestCentroid::predict(std::span<const double> x) const {
    detail::require(x.size() == centroids_.cols(), "NearestCentroid: dimension mismatch");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids_.rows(); ++c) {
        double d = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] - centroids_(c, k)) * (x[k] - centroids_(c, k));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return classes_[best];
}

ConstantClassifier::ConstantClassifier(int label, std::string name)
    : label_(label), name_(name.empty() ? "constant:" + std::to_string(label) : std::move(name)) {}

double Loss::operator()(int predicted, int truth) const {
    if (kind == Kind::zero_one) return predicted == truth ? 0.0 : 1.0;
    const double gap = std::abs(static_cast<double>(predicted) - static_cast<double>(truth)) / range;
    return std::min(1.0, std::pow(gap, q));
}

std::string Loss::describe() const {
    if (kind == Kind::zero_one) return "zero-one";
    std::ostringstream os;
    os << "power(q=" << q << ")";
    return os.str();
}

RiskEstimate empirical_risk(std::span<const int> predictions, std::span<const int> labels, const Loss& loss) {
    detail::require(predictions.size() == labels.size(), "empirical_risk: predictions and labels differ in length");
    detail::require(!labels.empty(), "empirical_risk: nothing to evaluate");
    detail::require(loss.kind == Loss::Kind::zero_one || (loss.q > 0.0 && loss.range > 0.0), "empirical_risk: invalid loss");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) total += loss(predictions[i], labels[i]);
    return RiskEstimate{total / static_cast<double>(labels.size()), loss, labels.size()};
}

RiskEstimate empirical_risk(const Classifier& h, const LabeledDataset& s, const Loss& loss) {
    const auto pred = h.predict_all(s.points);
    return empirical_risk(pred, s.labels, loss);
}

RiskEstimate pair_risk(const Classifier& h, const Classifier& h2, const Matrix& points, const Loss& loss) {
    return empirical_risk(h.predict_all(points), h2.predict_all(points), loss);
}

} // namespace hotda
