#include "tvacal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tvacal/error.hpp"
#include "tvacal/rng.hpp"

namespace tvacal {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw InvalidInput("matrix of " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " given " + std::to_string(values_.size()) + " values");
  }
}

LogitsDataset::LogitsDataset(Matrix logits, std::vector<Label> labels)
    : logits_(std::move(logits)), labels_(std::move(labels)) {
  if (logits_.rows() < 1) throw InvalidInput("dataset needs at least one sample");
  if (logits_.cols() < 2) throw InvalidInput("dataset needs at least two classes");
  if (labels_.size() != logits_.rows()) {
    throw InvalidInput("label count " + std::to_string(labels_.size()) + " does not match " +
                       std::to_string(logits_.rows()) + " logit rows");
  }
  for (std::size_t i = 0; i < logits_.rows(); ++i) {
    for (double z : logits_.row(i)) {
      if (!std::isfinite(z)) throw InvalidInput("non-finite logit in row " + std::to_string(i));
    }
    if (labels_[i] >= logits_.cols()) {
      throw InvalidInput("label " + std::to_string(labels_[i]) + " in row " + std::to_string(i) +
                         " is not below L = " + std::to_string(logits_.cols()));
    }
  }
}

LogitsDataset LogitsDataset::subset(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw InvalidInput("empty subset");
  const std::size_t L = num_classes();
  std::vector<double> values;
  values.reserve(rows.size() * L);
  std::vector<Label> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw InvalidInput("subset row " + std::to_string(r) + " out of range");
    const auto src = logits_.row(r);
    values.insert(values.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return LogitsDataset(Matrix(rows.size(), L, std::move(values)), std::move(labels));
}

ProbabilityMatrix::ProbabilityMatrix(Matrix probs) : probs_(std::move(probs)) {
  for (std::size_t i = 0; i < probs_.rows(); ++i) {
    double sum = 0.0;
    for (double p : probs_.row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput("probability outside [0, 1] in row " + std::to_string(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidInput("probability row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

double PredictionSummary::accuracy() const {
  if (correct.empty()) throw InvalidInput("accuracy of an empty summary");
  const auto hits = std::count(correct.begin(), correct.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

double PredictionSummary::mean_confidence() const {
  if (confidence.empty()) throw InvalidInput("mean confidence of an empty summary");
  return std::accumulate(confidence.begin(), confidence.end(), 0.0) /
         static_cast<double>(confidence.size());
}

std::size_t BinarySet::positives() const {
  return static_cast<std::size_t>(std::count(targets.begin(), targets.end(), std::uint8_t{1}));
}

double BinarySet::positive_fraction() const {
  if (targets.empty()) throw InvalidInput("positive fraction of an empty set");
  return static_cast<double>(positives()) / static_cast<double>(targets.size());
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

void softmax_row(std::span<const double> logits, double temperature, std::span<double> out) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - zmax) / temperature);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
}

ProbabilityMatrix softmax(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidParameter("temperature must be positive and finite, got " + std::to_string(temperature));
  }
  if (logits.cols() == 0) throw InvalidInput("softmax of a matrix with no columns");
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (double z : logits.row(i)) {
      if (!std::isfinite(z)) throw InvalidInput("non-finite logit in row " + std::to_string(i));
    }
    softmax_row(logits.row(i), temperature, probs.row(i));
  }
  return ProbabilityMatrix(std::move(probs), ProbabilityMatrix::Unchecked{});
}

PredictionSummary predict(const ProbabilityMatrix& probs, std::span<const Label> labels) {
  if (labels.size() != probs.rows()) {
    throw InvalidInput("label count " + std::to_string(labels.size()) + " does not match " +
                       std::to_string(probs.rows()) + " probability rows");
  }
  PredictionSummary out;
  out.predicted.reserve(labels.size());
  out.confidence.reserve(labels.size());
  out.correct.reserve(labels.size());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    const std::size_t k = argmax(row);
    out.predicted.push_back(static_cast<Label>(k));
    out.confidence.push_back(row[k]);
    out.correct.push_back(k == labels[i] ? 1 : 0);
  }
  return out;
}

BinarySet build_tva_set(const PredictionSummary& summary) {
  if (summary.confidence.size() != summary.correct.size()) {
    throw InvalidInput("prediction summary fields have different lengths");
  }
  return BinarySet{summary.confidence, summary.correct};
}

std::vector<BinarySet> build_ova_sets(const ProbabilityMatrix& probs, std::span<const Label> labels) {
  if (labels.size() != probs.rows()) throw InvalidInput("label count does not match probability rows");
  std::vector<BinarySet> sets(probs.cols());
  for (std::size_t k = 0; k < probs.cols(); ++k) {
    sets[k].scores.reserve(probs.rows());
    sets[k].targets.reserve(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      sets[k].scores.push_back(probs(i, k));
      sets[k].targets.push_back(labels[i] == k ? 1 : 0);
    }
  }
  return sets;
}

SplitResult split(const LogitsDataset& dataset, double calibration_fraction, std::uint64_t seed) {
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw InvalidParameter("calibration fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  const auto n_cal = static_cast<std::size_t>(std::floor(calibration_fraction * static_cast<double>(n)));
  if (n_cal == 0 || n_cal == n) {
    throw InvalidParameter("fraction " + std::to_string(calibration_fraction) + " of " +
                           std::to_string(n) + " samples leaves an empty part");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::size_t> cal(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_cal));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_cal), order.end());
  std::sort(cal.begin(), cal.end());
  std::sort(test.begin(), test.end());
  auto cal_set = dataset.subset(cal);
  auto test_set = dataset.subset(test);
  return SplitResult{std::move(cal_set), std::move(test_set), std::move(cal), std::move(test)};
}

}  // namespace tvacal
