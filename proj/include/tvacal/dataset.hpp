#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tvacal {

using Label = std::uint32_t;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// N x L logits with one integer label per row. Validated on construction:
/// N >= 1, L >= 2, every logit finite, every label < L.
class LogitsDataset {
 public:
  LogitsDataset(Matrix logits, std::vector<Label> labels);

  std::size_t size() const noexcept { return logits_.rows(); }
  std::size_t num_classes() const noexcept { return logits_.cols(); }

  const Matrix& logits() const noexcept { return logits_; }
  std::span<const Label> labels() const noexcept { return labels_; }

  /// Rows in the given order. Throws InvalidInput on an empty or out-of-range selection.
  LogitsDataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const LogitsDataset&, const LogitsDataset&) = default;

 private:
  Matrix logits_;
  std::vector<Label> labels_;
};

/// Row-stochastic matrix: entries in [0, 1], rows summing to 1 within 1e-9.
class ProbabilityMatrix {
 public:
  /// Validates the row-stochastic invariant.
  explicit ProbabilityMatrix(Matrix probs);

  std::size_t rows() const noexcept { return probs_.rows(); }
  std::size_t cols() const noexcept { return probs_.cols(); }
  std::span<const double> row(std::size_t r) const { return probs_.row(r); }
  double operator()(std::size_t r, std::size_t c) const { return probs_(r, c); }
  const Matrix& matrix() const noexcept { return probs_; }

 private:
  struct Unchecked {};
  ProbabilityMatrix(Matrix probs, Unchecked) : probs_(std::move(probs)) {}
  friend ProbabilityMatrix softmax(const Matrix& logits, double temperature);

  Matrix probs_;
};

/// Predicted class, confidence and correctness per sample.
struct PredictionSummary {
  std::vector<Label> predicted;
  std::vector<double> confidence;
  std::vector<std::uint8_t> correct;

  std::size_t size() const noexcept { return predicted.size(); }
  double accuracy() const;
  double mean_confidence() const;
};

/// Scores with binary targets; the input of every one-dimensional calibrator.
struct BinarySet {
  std::vector<double> scores;
  std::vector<std::uint8_t> targets;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t positives() const;
  double positive_fraction() const;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Softmax of one row at the given temperature, with max-shift stabilization.
void softmax_row(std::span<const double> logits, double temperature, std::span<double> out);

/// Row-wise softmax of logits / temperature.
/// Throws InvalidParameter for temperature <= 0 (or non-finite), InvalidInput for non-finite logits.
ProbabilityMatrix softmax(const Matrix& logits, double temperature = 1.0);

/// Argmax prediction, max-probability confidence and correctness against labels.
PredictionSummary predict(const ProbabilityMatrix& probs, std::span<const Label> labels);

/// Surrogate "is the prediction correct?" set: scores are confidences, targets correctness.
BinarySet build_tva_set(const PredictionSummary& summary);

/// Per-class surrogate sets (f_k(x), 1[y = k]) for k = 0 .. L-1.
std::vector<BinarySet> build_ova_sets(const ProbabilityMatrix& probs, std::span<const Label> labels);

struct SplitResult {
  LogitsDataset calibration;
  LogitsDataset test;
  std::vector<std::size_t> calibration_rows;  // ascending source row indices
  std::vector<std::size_t> test_rows;
};

/// Seeded unstratified split. Rows are shuffled with Rng(seed) and the first
/// floor(fraction * N) go to the calibration part; each part keeps source order.
SplitResult split(const LogitsDataset& dataset, double calibration_fraction, std::uint64_t seed);

}  // namespace tvacal
