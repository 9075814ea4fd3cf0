#pragma once

#include "hotda/structures.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hotda {

/// Hypothesis h: R^d -> class index.
class Classifier {
  public:
    virtual ~Classifier() = default;
    virtual int predict(std::span<const double> x) const = 0;
    virtual std::string name() const = 0;
    std::vector<int> predict_all(const Matrix& points) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

/// 1-nearest-neighbor; distance ties go to the lowest training index.
class NearestNeighbor final : public Classifier {
  public:
    NearestNeighbor(const Matrix& train, std::vector<int> labels, std::string name = "1nn");
    explicit NearestNeighbor(const LabeledDataset& s, std::string name = "1nn");
    int predict(std::span<const double> x) const override;
    std::string name() const override { return name_; }

  private:
    Matrix train_t_; // d x n, transposed for the distance kernel
    std::vector<int> labels_;
    std::string name_;
};

/// Assigns the class whose mean is closest, among classes present in the training data.
class NearestCentroid final : public Classifier {
  public:
    explicit NearestCentroid(const LabeledDataset& s, std::string name = "centroid");
    int predict(std::span<const double> x) const override;
    std::string name() const override { return name_; }

  private:
    Matrix centroids_;
    std::vector<int> classes_;
    std::string name_;
};

class ConstantClassifier final : public Classifier {
  public:
    explicit ConstantClassifier(int label, std::string name = {});
    int predict(std::span<const double>) const override { return label_; }
    std::string name() const override { return name_; }

  private:
    int label_;
    std::string name_;
};

/// Bounded loss on class indices.
struct Loss {
    enum class Kind { zero_one, power };
    Kind kind = Kind::zero_one;
    /// Exponent q of (|h - f| / range)^q for the power loss.
    double q = 1.0;
    /// Largest possible |h - f| (k - 1); normalizes the power loss into [0, 1].
    double range = 1.0;

    static Loss zero_one() { return {}; }
    static Loss power(double q, double range) { return {Kind::power, q, range}; }
    double operator()(int predicted, int truth) const;
    std::string describe() const;
};

struct RiskEstimate {
    double value = 0.0;
    Loss loss;
    std::size_t n_eval = 0;
};

/// Mean loss between predictions and labels.
RiskEstimate empirical_risk(std::span<const int> predictions, std::span<const int> labels, const Loss& loss = Loss::zero_one());
/// Empirical risk of h on a labeled dataset.
RiskEstimate empirical_risk(const Classifier& h, const LabeledDataset& s, const Loss& loss = Loss::zero_one());
/// Disagreement of two hypotheses on a point set.
RiskEstimate pair_risk(const Classifier& h, const Classifier& h2, const Matrix& points, const Loss& loss = Loss::zero_one());

} // namespace hotda
