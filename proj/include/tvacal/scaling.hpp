#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tvacal/dataset.hpp"

namespace tvacal {

/// Confidences are clamped to [eps, 1 - eps] before taking logs in the binary loss.
inline constexpr double kConfidenceEpsilon = 1e-12;

/// Bounds of the temperature search range.
inline constexpr double kMinTemperature = 1e-2;
inline constexpr double kMaxTemperature = 1e2;

enum class Loss {
  cross_entropy,  // -log f_y
  bce_tva,        // binary cross-entropy of the confidence against prediction correctness
};

std::string_view to_string(Loss loss);

struct FitOptions {
  Loss loss = Loss::cross_entropy;
  double lambda = 0.01;  // vector and Dirichlet scaling only
  double learning_rate = 0.01;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-9;  // on the absolute change of the objective
  /// Start vector / Dirichlet scaling from a fitted temperature: v = 1/T, W = I/T.
  std::optional<double> init_temperature;

  void validate() const;
};

/// Objective value after every iteration (entry 0 is the starting point).
struct FitTrace {
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

struct TemperatureModel {
  double temperature = 1.0;

  void validate() const;
};

/// z' = v * z + b (element-wise).
struct VectorModel {
  std::vector<double> weights;
  std::vector<double> bias;

  void validate() const;
};

/// z' = W log softmax(z) + b.
struct DirichletModel {
  Matrix weights;
  std::vector<double> bias;

  void validate() const;
  static DirichletModel identity(std::size_t classes);
};

// Per-sample losses and temperature gradients. `logits` is one row.

double ce_loss(std::span<const double> logits, Label label, double temperature);

/// s is the maximum softmax probability at the given temperature, clamped to [eps, 1 - eps].
double bce_tva_loss(std::span<const double> logits, bool correct, double temperature);

/// (1/T^2) (z_y - sum_k z_k f_k)
double grad_ce_temperature(std::span<const double> logits, Label label, double temperature);

/// (1/T^2) ((y - s) / (1 - s)) (z_max - sum_k z_k f_k), with 1 - s floored at eps.
/// For a correct prediction this is exactly grad_ce_temperature at the predicted label.
double grad_bce_temperature(std::span<const double> logits, bool correct, double temperature);

/// Penalty toward the reference value 1: (1/L) sum_i (v_i - 1)^2.
double regularizer(std::span<const double> weights);

/// Gradient descent on log T of the mean loss. Throws OptimizationFailure on a non-finite objective.
TemperatureModel fit_temperature(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace = nullptr);

/// Proximal gradient descent on mean loss + lambda * (l_reg(v) + (1/L) sum b^2).
VectorModel fit_vector(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace = nullptr);

/// Proximal gradient descent on mean loss + lambda * ((1/L) sum (W_kk - 1)^2
/// + (1/(L(L-1))) sum_{k != j} W_kj^2 + (1/L) sum b^2).
DirichletModel fit_dirichlet(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace = nullptr);

ProbabilityMatrix apply_scaling(const TemperatureModel& model, const Matrix& logits);
ProbabilityMatrix apply_scaling(const VectorModel& model, const Matrix& logits);
ProbabilityMatrix apply_scaling(const DirichletModel& model, const Matrix& logits);

namespace detail {

/// Objective value and gradient of the smooth part (mean loss) with the regularizer
/// value included in `value`. Parameters are flattened as [v..., b...] for vector
/// scaling and [W row-major..., b...] for Dirichlet scaling.
struct Evaluation {
  double value = 0.0;
  std::vector<double> gradient;
};

Evaluation vector_objective(const LogitsDataset& cal, const VectorModel& model, const FitOptions& options);
Evaluation dirichlet_objective(const LogitsDataset& cal, const DirichletModel& model, const FitOptions& options);

/// Full objective (mean loss + regularizer) by direct evaluation; used to check gradients
/// numerically.
double vector_objective_value(const LogitsDataset& cal, const VectorModel& model, const FitOptions& options);
double dirichlet_objective_value(const LogitsDataset& cal, const DirichletModel& model, const FitOptions& options);

/// Gradient of the regularizer alone, same flattening as above.
std::vector<double> vector_regularizer_gradient(const VectorModel& model, double lambda);
std::vector<double> dirichlet_regularizer_gradient(const DirichletModel& model, double lambda);

}  // namespace detail

}  // namespace tvacal
