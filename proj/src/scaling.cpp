#include "tvacal/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "descent.hpp"
#include "kernels.hpp"
#include "tvacal/error.hpp"

namespace tvacal {
namespace {

// Quantities of one logit row at temperature T, shifted by the row maximum z_m:
// e_k = exp((z_k - z_m) / T), sum = sum_k e_k, so f_k = e_k / sum and s = 1 / sum.
struct TemperedRow {
  std::size_t top = 0;
  double sum = 0.0;
  double others = 0.0;  // sum over k != top, so 1 - s = others / sum without cancellation
};

TemperedRow temper(std::span<const double> z, double t, std::vector<double>& e) {
  TemperedRow r;
  r.top = argmax(z);
  const double zm = z[r.top];
  e.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    e[k] = std::exp((z[k] - zm) / t);
    if (k != r.top) r.others += e[k];
  }
  r.sum = 1.0 + r.others;
  return r;
}

// z_ref - sum_k z_k f_k, accumulated as sum_k (z_ref - z_k) f_k.
double centered_gap(std::span<const double> z, double z_ref, const TemperedRow& r, const std::vector<double>& e) {
  double acc = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) acc += (z_ref - z[k]) * e[k];
  return acc / r.sum;
}

double clamp_probability(double p) { return std::clamp(p, kConfidenceEpsilon, 1.0 - kConfidenceEpsilon); }

void check_row(std::span<const double> z, double t) {
  if (z.size() < 2) throw InvalidInput("a logit row needs at least two classes");
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidParameter("temperature must be positive and finite");
  for (double v : z) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite logit");
  }
}

std::vector<std::uint8_t> raw_correctness(const LogitsDataset& cal) {
  const auto summary = predict(softmax(cal.logits(), 1.0), cal.labels());
  return summary.correct;
}

// Loss of one transformed row z' (temperature 1) and its gradient with respect to z'.
// For the binary loss the confidence is the probability of the raw predicted class.
double row_loss_and_gradient(std::span<const double> zp, Loss loss, Label label, Label predicted, bool correct,
                             std::span<double> p, std::span<double> grad) {
  const std::size_t L = zp.size();
  const double zmax = *std::max_element(zp.begin(), zp.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    p[k] = std::exp(zp[k] - zmax);
    sum += p[k];
  }
  for (std::size_t k = 0; k < L; ++k) p[k] /= sum;

  if (loss == Loss::cross_entropy) {
    for (std::size_t k = 0; k < L; ++k) grad[k] = p[k];
    grad[label] -= 1.0;
    return zmax + std::log(sum) - zp[label];
  }

  const double s = p[predicted];
  double rest = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    if (k != predicted) rest += p[k];
  }
  if (correct) {
    for (std::size_t k = 0; k < L; ++k) grad[k] = p[k];
    grad[predicted] -= 1.0;
    return -std::log(clamp_probability(s));
  }
  const double rest_c = clamp_probability(rest);
  const double factor = s / rest_c;
  for (std::size_t k = 0; k < L; ++k) grad[k] = -factor * p[k];
  grad[predicted] += factor;
  return -std::log(rest_c);
}

struct SampleTargets {
  std::vector<Label> predicted;
  std::vector<std::uint8_t> correct;
};

SampleTargets sample_targets(const LogitsDataset& cal) {
  const auto summary = predict(softmax(cal.logits(), 1.0), cal.labels());
  return {summary.predicted, summary.correct};
}

// Closed-form proximal step of lambda * c * (x - ref)^2 for step size `step`.
double shrink(double x, double ref, double lambda, double c, double step) {
  return ref + (x - ref) / (1.0 + 2.0 * step * lambda * c);
}

constexpr double kMinVectorWeight = 1e-6;

}  // namespace

std::string_view to_string(Loss loss) { return loss == Loss::cross_entropy ? "cross_entropy" : "bce_tva"; }

void FitOptions::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidParameter("learning rate must be positive");
  }
  if (max_iterations < 1) throw InvalidParameter("max iterations must be positive");
  if (!(tolerance > 0.0)) throw InvalidParameter("tolerance must be positive");
  if (init_temperature && (!(*init_temperature > 0.0) || !std::isfinite(*init_temperature))) {
    throw InvalidParameter("initial temperature must be positive");
  }
}

void TemperatureModel::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("temperature must be positive and finite");
  }
}

void VectorModel::validate() const {
  if (weights.size() < 2 || weights.size() != bias.size()) {
    throw InvalidInput("vector model needs matching weight and bias vectors of length >= 2");
  }
  for (double v : weights) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("vector weights must be positive and finite");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw InvalidInput("vector bias must be finite");
  }
}

void DirichletModel::validate() const {
  if (weights.rows() < 2 || weights.rows() != weights.cols() || bias.size() != weights.rows()) {
    throw InvalidInput("Dirichlet model needs an L x L matrix and a length-L bias");
  }
  for (double w : weights.values()) {
    if (!std::isfinite(w)) throw InvalidInput("Dirichlet weights must be finite");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw InvalidInput("Dirichlet bias must be finite");
  }
}

DirichletModel DirichletModel::identity(std::size_t classes) {
  DirichletModel m{Matrix(classes, classes, 0.0), std::vector<double>(classes, 0.0)};
  for (std::size_t k = 0; k < classes; ++k) m.weights(k, k) = 1.0;
  return m;
}

double ce_loss(std::span<const double> logits, Label label, double temperature) {
  check_row(logits, temperature);
  if (label >= logits.size()) throw InvalidInput("label out of range");
  std::vector<double> e;
  const auto r = temper(logits, temperature, e);
  return std::log(r.sum) - (logits[label] - logits[r.top]) / temperature;
}

double bce_tva_loss(std::span<const double> logits, bool correct, double temperature) {
  check_row(logits, temperature);
  std::vector<double> e;
  const auto r = temper(logits, temperature, e);
  if (correct) return -std::log(clamp_probability(1.0 / r.sum));
  return -std::log(clamp_probability(r.others / r.sum));
}

double grad_ce_temperature(std::span<const double> logits, Label label, double temperature) {
  check_row(logits, temperature);
  if (label >= logits.size()) throw InvalidInput("label out of range");
  std::vector<double> e;
  const auto r = temper(logits, temperature, e);
  return centered_gap(logits, logits[label], r, e) / (temperature * temperature);
}

double grad_bce_temperature(std::span<const double> logits, bool correct, double temperature) {
  check_row(logits, temperature);
  std::vector<double> e;
  const auto r = temper(logits, temperature, e);
  const double gap = centered_gap(logits, logits[r.top], r, e) / (temperature * temperature);
  if (correct) return gap;
  const double s = 1.0 / r.sum;
  const double one_minus_s = std::max(r.others / r.sum, kConfidenceEpsilon);
  return -(s / one_minus_s) * gap;
}

double regularizer(std::span<const double> weights) {
  if (weights.empty()) throw InvalidInput("regularizer of an empty vector");
  double sum = 0.0;
  for (double v : weights) sum += (v - 1.0) * (v - 1.0);
  return sum / static_cast<double>(weights.size());
}

TemperatureModel fit_temperature(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace) {
  options.validate();
  const auto correct = raw_correctness(cal);
  const auto labels = cal.labels();
  const std::size_t n = cal.size();
  const std::size_t L = cal.num_classes();
  const double log_min = std::log(kMinTemperature);
  const double log_max = std::log(kMaxTemperature);

  // Logits shifted by their row maximum, so every entry is <= 0 and the top one is 0.
  std::vector<double> shifted(n * L);
  std::vector<std::size_t> top(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = cal.logits().row(i);
    top[i] = argmax(z);
    for (std::size_t k = 0; k < L; ++k) shifted[i * L + k] = z[k] - z[top[i]];
  }
  std::vector<double> e(L);

  auto evaluate = [&](const std::vector<double>& x) {
    const double t = std::exp(x[0]);
    const double inv_t = 1.0 / t;
    double loss = 0.0;
    double grad_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* d = shifted.data() + i * L;
      detail::exp_scaled(d, e.data(), L, inv_t);  // e_k = exp(d_k / T), e_top = 1
      double others = 0.0;
      double weighted = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        if (k != top[i]) others += e[k];
        weighted += d[k] * e[k];
      }
      const double sum = 1.0 + others;
      const double mean_d = weighted / sum;  // sum_k d_k f_k
      if (options.loss == Loss::cross_entropy) {
        const double dy = d[labels[i]];
        loss += std::log(sum) - dy * inv_t;
        grad_t += dy - mean_d;
      } else if (correct[i]) {
        loss += -std::log(clamp_probability(1.0 / sum));
        grad_t += -mean_d;
      } else {
        const double one_minus_s = clamp_probability(others / sum);
        loss += -std::log(one_minus_s);
        grad_t += (1.0 / sum) / one_minus_s * mean_d;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    // d/d(log T) = T * d/dT, and d/dT carries the 1/T^2 factor.
    return detail::Evaluation{loss * inv_n, {grad_t * inv_n * inv_t}};
  };
  auto clamp_log_t = [&](std::vector<double>& x, double) { x[0] = std::clamp(x[0], log_min, log_max); };

  const double t0 = options.init_temperature.value_or(1.0);
  std::vector<double> x{std::clamp(std::log(t0), log_min, log_max)};
  x = detail::proximal_descent(std::move(x), evaluate, clamp_log_t, options, trace);
  return TemperatureModel{std::exp(x[0])};
}

namespace detail {

namespace {

Evaluation vector_objective_with(const LogitsDataset& cal, const SampleTargets& targets, const VectorModel& model,
                                 const FitOptions& options) {
  const std::size_t n = cal.size();
  const std::size_t L = cal.num_classes();
  std::vector<double> zp(L), p(L), g(L);
  Evaluation out;
  out.gradient.assign(2 * L, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = cal.logits().row(i);
    for (std::size_t k = 0; k < L; ++k) zp[k] = model.weights[k] * z[k] + model.bias[k];
    loss += row_loss_and_gradient(zp, options.loss, cal.labels()[i], targets.predicted[i], targets.correct[i] != 0,
                                  p, g);
    for (std::size_t k = 0; k < L; ++k) {
      out.gradient[k] += g[k] * z[k];
      out.gradient[L + k] += g[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : out.gradient) v *= inv_n;
  double bias_sq = 0.0;
  for (double b : model.bias) bias_sq += b * b;
  out.value = loss * inv_n + options.lambda * (regularizer(model.weights) + bias_sq / static_cast<double>(L));
  return out;
}

}  // namespace

Evaluation vector_objective(const LogitsDataset& cal, const VectorModel& model, const FitOptions& options) {
  return vector_objective_with(cal, sample_targets(cal), model, options);
}

double vector_objective_value(const LogitsDataset& cal, const VectorModel& model, const FitOptions& options) {
  const std::size_t L = cal.num_classes();
  Matrix transformed(cal.size(), L);
  for (std::size_t i = 0; i < cal.size(); ++i) {
    for (std::size_t k = 0; k < L; ++k) {
      transformed(i, k) = model.weights[k] * cal.logits()(i, k) + model.bias[k];
    }
  }
  const auto targets = sample_targets(cal);
  const auto probs = softmax(transformed, 1.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < cal.size(); ++i) {
    if (options.loss == Loss::cross_entropy) {
      loss += -std::log(probs(i, cal.labels()[i]));
    } else {
      const double s = clamp_probability(probs(i, targets.predicted[i]));
      loss += targets.correct[i] ? -std::log(s) : -std::log(1.0 - s);
    }
  }
  double bias_sq = 0.0;
  for (double b : model.bias) bias_sq += b * b;
  return loss / static_cast<double>(cal.size()) +
         options.lambda * (regularizer(model.weights) + bias_sq / static_cast<double>(L));
}

std::vector<double> vector_regularizer_gradient(const VectorModel& model, double lambda) {
  const std::size_t L = model.weights.size();
  std::vector<double> g(2 * L);
  for (std::size_t k = 0; k < L; ++k) {
    g[k] = 2.0 * lambda * (model.weights[k] - 1.0) / static_cast<double>(L);
    g[L + k] = 2.0 * lambda * model.bias[k] / static_cast<double>(L);
  }
  return g;
}

namespace {

Matrix log_probabilities(const LogitsDataset& cal) {
  Matrix q(cal.size(), cal.num_classes());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const auto z = cal.logits().row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    for (std::size_t k = 0; k < z.size(); ++k) q(i, k) = z[k] - lse;
  }
  return q;
}

double dirichlet_penalty(const DirichletModel& model) {
  const std::size_t L = model.bias.size();
  double diag = 0.0, off = 0.0, bias = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    for (std::size_t j = 0; j < L; ++j) {
      const double w = model.weights(k, j);
      if (k == j) {
        diag += (w - 1.0) * (w - 1.0);
      } else {
        off += w * w;
      }
    }
    bias += model.bias[k] * model.bias[k];
  }
  const double l = static_cast<double>(L);
  return diag / l + off / (l * (l - 1.0)) + bias / l;
}

void dirichlet_transform(const DirichletModel& model, std::span<const double> q, std::span<double> out) {
  const std::size_t L = q.size();
  for (std::size_t k = 0; k < L; ++k) {
    double acc = model.bias[k];
    const auto w = model.weights.row(k);
    for (std::size_t j = 0; j < L; ++j) acc += w[j] * q[j];
    out[k] = acc;
  }
}

Evaluation dirichlet_objective_with(const LogitsDataset& cal, const Matrix& q, const SampleTargets& targets,
                                    const DirichletModel& model, const FitOptions& options) {
  const std::size_t n = cal.size();
  const std::size_t L = cal.num_classes();
  std::vector<double> zp(L), p(L), g(L);
  Evaluation out;
  out.gradient.assign(L * L + L, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = q.row(i);
    dirichlet_transform(model, qi, zp);
    loss += row_loss_and_gradient(zp, options.loss, cal.labels()[i], targets.predicted[i], targets.correct[i] != 0,
                                  p, g);
    for (std::size_t k = 0; k < L; ++k) {
      double* row = out.gradient.data() + k * L;
      for (std::size_t j = 0; j < L; ++j) row[j] += g[k] * qi[j];
      out.gradient[L * L + k] += g[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : out.gradient) v *= inv_n;
  out.value = loss * inv_n + options.lambda * dirichlet_penalty(model);
  return out;
}

}  // namespace

Evaluation dirichlet_objective(const LogitsDataset& cal, const DirichletModel& model, const FitOptions& options) {
  return dirichlet_objective_with(cal, log_probabilities(cal), sample_targets(cal), model, options);
}

double dirichlet_objective_value(const LogitsDataset& cal, const DirichletModel& model, const FitOptions& options) {
  const auto targets = sample_targets(cal);
  const auto probs = apply_scaling(model, cal.logits());
  double loss = 0.0;
  for (std::size_t i = 0; i < cal.size(); ++i) {
    if (options.loss == Loss::cross_entropy) {
      loss += -std::log(probs(i, cal.labels()[i]));
    } else {
      const double s = clamp_probability(probs(i, targets.predicted[i]));
      loss += targets.correct[i] ? -std::log(s) : -std::log(1.0 - s);
    }
  }
  return loss / static_cast<double>(cal.size()) + options.lambda * dirichlet_penalty(model);
}

std::vector<double> dirichlet_regularizer_gradient(const DirichletModel& model, double lambda) {
  const std::size_t L = model.bias.size();
  const double l = static_cast<double>(L);
  std::vector<double> g(L * L + L);
  for (std::size_t k = 0; k < L; ++k) {
    for (std::size_t j = 0; j < L; ++j) {
      const double w = model.weights(k, j);
      g[k * L + j] = k == j ? 2.0 * lambda * (w - 1.0) / l : 2.0 * lambda * w / (l * (l - 1.0));
    }
    g[L * L + k] = 2.0 * lambda * model.bias[k] / l;
  }
  return g;
}

}  // namespace detail

VectorModel fit_vector(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace) {
  options.validate();
  const std::size_t L = cal.num_classes();
  const double l = static_cast<double>(L);
  const double w0 = 1.0 / options.init_temperature.value_or(1.0);

  const auto targets = sample_targets(cal);
  std::vector<double> x(2 * L, 0.0);
  std::fill(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(L), w0);

  auto unpack = [L](const std::vector<double>& params) {
    return VectorModel{std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(L)),
                       std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(L), params.end())};
  };
  auto evaluate = [&](const std::vector<double>& params) {
    return detail::vector_objective_with(cal, targets, unpack(params), options);
  };
  auto prox = [&](std::vector<double>& params, double step) {
    for (std::size_t k = 0; k < L; ++k) {
      params[k] = std::max(shrink(params[k], 1.0, options.lambda, 1.0 / l, step), kMinVectorWeight);
      params[L + k] = shrink(params[L + k], 0.0, options.lambda, 1.0 / l, step);
    }
  };
  x = detail::proximal_descent(std::move(x), evaluate, prox, options, trace);
  return unpack(x);
}

DirichletModel fit_dirichlet(const LogitsDataset& cal, const FitOptions& options, FitTrace* trace) {
  options.validate();
  const std::size_t L = cal.num_classes();
  const double l = static_cast<double>(L);
  const double w0 = 1.0 / options.init_temperature.value_or(1.0);
  const Matrix q = detail::log_probabilities(cal);
  const auto targets = sample_targets(cal);

  std::vector<double> x(L * L + L, 0.0);
  for (std::size_t k = 0; k < L; ++k) x[k * L + k] = w0;

  auto unpack = [L](const std::vector<double>& params) {
    DirichletModel m;
    m.weights = Matrix(L, L, std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(L * L)));
    m.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(L * L), params.end());
    return m;
  };
  auto evaluate = [&](const std::vector<double>& params) {
    return detail::dirichlet_objective_with(cal, q, targets, unpack(params), options);
  };
  auto prox = [&](std::vector<double>& params, double step) {
    for (std::size_t k = 0; k < L; ++k) {
      for (std::size_t j = 0; j < L; ++j) {
        double& w = params[k * L + j];
        w = k == j ? shrink(w, 1.0, options.lambda, 1.0 / l, step)
                   : shrink(w, 0.0, options.lambda, 1.0 / (l * (l - 1.0)), step);
      }
      params[L * L + k] = shrink(params[L * L + k], 0.0, options.lambda, 1.0 / l, step);
    }
  };
  x = detail::proximal_descent(std::move(x), evaluate, prox, options, trace);
  return unpack(x);
}

ProbabilityMatrix apply_scaling(const TemperatureModel& model, const Matrix& logits) {
  model.validate();
  return softmax(logits, model.temperature);
}

ProbabilityMatrix apply_scaling(const VectorModel& model, const Matrix& logits) {
  model.validate();
  if (logits.cols() != model.weights.size()) throw InvalidInput("vector model has a different class count");
  Matrix transformed(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t k = 0; k < logits.cols(); ++k) {
      transformed(i, k) = model.weights[k] * logits(i, k) + model.bias[k];
    }
  }
  return softmax(transformed, 1.0);
}

ProbabilityMatrix apply_scaling(const DirichletModel& model, const Matrix& logits) {
  model.validate();
  const std::size_t L = logits.cols();
  if (L != model.bias.size()) throw InvalidInput("Dirichlet model has a different class count");
  Matrix transformed(logits.rows(), L);
  std::vector<double> q(L);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    for (double v : z) {
      if (!std::isfinite(v)) throw InvalidInput("non-finite logit in row " + std::to_string(i));
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    for (std::size_t k = 0; k < L; ++k) q[k] = z[k] - lse;
    detail::dirichlet_transform(model, q, transformed.row(i));
  }
  return softmax(transformed, 1.0);
}

}  // namespace tvacal
