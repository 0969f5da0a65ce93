#include "tvacal/adapters.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "tvacal/error.hpp"

namespace tvacal {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::none, "none"},
    {Method::ts, "ts"},
    {Method::vs, "vs"},
    {Method::dc, "dc"},
    {Method::hb, "hb"},
    {Method::iso, "iso"},
    {Method::beta, "beta"},
    {Method::bbq, "bbq"},
}};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

BinaryModel fit_binary(Method method, const BinarySet& set, const CalibratorOptions& options,
                       std::optional<HistogramScheme> scheme) {
  switch (method) {
    case Method::hb:
      return scheme ? fit_histogram(set, options.bins, *scheme) : fit_histogram_best(set, options.bins);
    case Method::iso:
      return fit_isotonic(set);
    case Method::beta:
      return fit_beta(set, options.beta);
    case Method::bbq: {
      const auto candidates =
          options.bbq_candidates.empty() ? default_bbq_candidates(set.size()) : options.bbq_candidates;
      return fit_bbq(set, candidates);
    }
    default:
      throw InvalidParameter(std::string(to_string(method)) + " is not a binary method");
  }
}

FitOptions scaling_options(const CalibratorOptions& options, Loss loss) {
  FitOptions fit = options.scaling;
  fit.loss = loss;
  return fit;
}

CalibratorModel fit_scaling(Method method, const LogitsDataset& cal, const CalibratorOptions& options, Loss loss) {
  FitOptions fit = scaling_options(options, loss);
  if (method == Method::ts) return fit_temperature(cal, fit);
  if (options.init_from_temperature) {
    FitOptions ts = fit;
    ts.init_temperature.reset();
    fit.init_temperature = fit_temperature(cal, ts).temperature;
  }
  if (method == Method::vs) return fit_vector(cal, fit);
  if (method == Method::dc) return fit_dirichlet(cal, fit);
  throw InvalidParameter(std::string(to_string(method)) + " is not a scaling method");
}

void check_combination(Method method, Mode mode) {
  if (!is_valid_combination(method, mode)) {
    throw InvalidParameter("method " + std::string(to_string(method)) + " does not support mode " +
                           std::string(to_string(mode)) + "; valid pairs: " + valid_combinations());
  }
}

// Calibrated per-class scores of an ova ensemble for one probability row.
void ova_row(const OvaEnsemble& ensemble, std::span<const double> probs, std::span<double> out) {
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    out[k] = apply_binary(ensemble.members[k], probs[k]);
    sum += out[k];
  }
  if (!ensemble.normalize) return;
  if (sum > 0.0) {
    for (double& v : out) v /= sum;
  } else {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
}

PredictionSummary summarize_scores(const Matrix& scores, std::span<const Label> labels) {
  PredictionSummary s;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const std::size_t k = argmax(row);
    s.predicted.push_back(static_cast<Label>(k));
    s.confidence.push_back(row[k]);
    s.correct.push_back(k == labels[i] ? 1 : 0);
  }
  return s;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::standard:
      return "standard";
    case Mode::ova:
      return "ova";
    case Mode::tva:
      return "tva";
  }
  return "?";
}

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "standard") return Mode::standard;
  if (name == "ova") return Mode::ova;
  if (name == "tva") return Mode::tva;
  throw InvalidParameter("unknown mode '" + std::string(name) + "' (expected standard, ova or tva)");
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  throw InvalidParameter("unknown method '" + std::string(name) + "' (expected ts, vs, dc, hb, iso, beta or bbq)");
}

bool is_scaling(Method method) { return method == Method::ts || method == Method::vs || method == Method::dc; }

bool is_binary(Method method) {
  return method == Method::hb || method == Method::iso || method == Method::beta || method == Method::bbq;
}

bool is_valid_combination(Method method, Mode mode) {
  if (method == Method::none) return mode == Mode::standard;
  if (is_scaling(method)) return mode == Mode::standard || mode == Mode::tva;
  return mode == Mode::ova || mode == Mode::tva;
}

std::string valid_combinations() {
  return "{ts,vs,dc} x {standard,tva}, {hb,iso,beta,bbq} x {ova,tva}";
}

bool Calibrator::prediction_preserving() const {
  if (method == Method::none || method == Method::ts) return true;
  return mode == Mode::tva && is_binary(method);
}

std::optional<std::size_t> Calibrator::num_classes() const {
  return std::visit(Overloaded{
                        [](const VectorModel& m) -> std::optional<std::size_t> { return m.weights.size(); },
                        [](const DirichletModel& m) -> std::optional<std::size_t> { return m.bias.size(); },
                        [](const OvaEnsemble& m) -> std::optional<std::size_t> { return m.members.size(); },
                        [](const auto&) -> std::optional<std::size_t> { return std::nullopt; },
                    },
                    model);
}

void Calibrator::validate() const {
  check_combination(method, mode);
  const bool ok = std::visit(
      Overloaded{
          [&](const std::monostate&) { return method == Method::none; },
          [&](const TemperatureModel& m) { return m.validate(), method == Method::ts; },
          [&](const VectorModel& m) { return m.validate(), method == Method::vs; },
          [&](const DirichletModel& m) { return m.validate(), method == Method::dc; },
          [&](const BinaryModel& m) { return tvacal::validate(m), mode == Mode::tva && is_binary(method); },
          [&](const OvaEnsemble& m) {
            if (m.members.size() < 2) throw InvalidInput("ova ensemble needs at least two members");
            for (const auto& member : m.members) tvacal::validate(member);
            return mode == Mode::ova;
          },
      },
      model);
  if (!ok) throw InvalidInput("calibrator model does not match its method and mode");
}

Calibrator fit_tva(Method method, const LogitsDataset& cal, const CalibratorOptions& options) {
  check_combination(method, Mode::tva);
  Calibrator c;
  c.mode = Mode::tva;
  c.method = method;
  if (is_scaling(method)) {
    c.model = fit_scaling(method, cal, options, Loss::bce_tva);
    return c;
  }
  const auto raw = predict(softmax(cal.logits(), 1.0), cal.labels());
  c.model = fit_binary(method, build_tva_set(raw), options, options.histogram_scheme);
  return c;
}

Calibrator fit_standard(Method method, const LogitsDataset& cal, const CalibratorOptions& options) {
  check_combination(method, Mode::standard);
  Calibrator c;
  c.mode = Mode::standard;
  c.method = method;
  if (method != Method::none) c.model = fit_scaling(method, cal, options, Loss::cross_entropy);
  return c;
}

Calibrator fit_ova(Method method, const LogitsDataset& cal, const CalibratorOptions& options) {
  check_combination(method, Mode::ova);
  const auto probs = softmax(cal.logits(), 1.0);
  const auto sets = build_ova_sets(probs, cal.labels());
  const std::size_t L = cal.num_classes();

  Calibrator c;
  c.mode = Mode::ova;
  c.method = method;

  auto fit_all = [&](std::optional<HistogramScheme> scheme) {
    OvaEnsemble ensemble;
    ensemble.normalize = options.normalize;
    ensemble.members.reserve(L);
    std::vector<std::string> warnings;
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t positives = sets[k].positives();
      if (positives == 0 || positives == sets[k].size()) {
        const double prior = sets[k].positive_fraction();
        ensemble.members.emplace_back(ConstantModel{prior});
        warnings.push_back("class " + std::to_string(k) + " has " + (positives == 0 ? "no positive" : "only positive") +
                           " calibration examples; using the constant " + std::to_string(prior));
      } else {
        ensemble.members.push_back(fit_binary(method, sets[k], options, scheme));
      }
    }
    return std::pair{std::move(ensemble), std::move(warnings)};
  };

  if (method == Method::hb && !options.histogram_scheme) {
    // One scheme for every class, chosen by calibration-set ECE of the calibrated predictions.
    auto [size_ensemble, size_warnings] = fit_all(HistogramScheme::equal_size);
    auto [mass_ensemble, mass_warnings] = fit_all(HistogramScheme::equal_mass);
    auto calibration_ece = [&](const OvaEnsemble& e) {
      Matrix scores(cal.size(), L);
      for (std::size_t i = 0; i < cal.size(); ++i) ova_row(e, probs.row(i), scores.row(i));
      const auto s = summarize_scores(scores, cal.labels());
      return ece(s.confidence, s.correct, kDefaultEceBins, BinScheme::equal_width);
    };
    if (calibration_ece(mass_ensemble) < calibration_ece(size_ensemble)) {
      c.model = std::move(mass_ensemble);
      c.warnings = std::move(mass_warnings);
    } else {
      c.model = std::move(size_ensemble);
      c.warnings = std::move(size_warnings);
    }
    return c;
  }
  auto [ensemble, warnings] = fit_all(options.histogram_scheme);
  c.model = std::move(ensemble);
  c.warnings = std::move(warnings);
  return c;
}

Calibrator fit_calibrator(Method method, Mode mode, const LogitsDataset& cal, const CalibratorOptions& options) {
  check_combination(method, mode);
  switch (mode) {
    case Mode::standard:
      return fit_standard(method, cal, options);
    case Mode::ova:
      return fit_ova(method, cal, options);
    case Mode::tva:
      return fit_tva(method, cal, options);
  }
  throw InvalidParameter("unknown mode");
}

CalibratedOutput apply_calibrator(const Calibrator& calibrator, const LogitsDataset& dataset) {
  calibrator.validate();
  if (const auto L = calibrator.num_classes(); L && *L != dataset.num_classes()) {
    throw InvalidInput("calibrator expects " + std::to_string(*L) + " classes, dataset has " +
                       std::to_string(dataset.num_classes()));
  }
  const auto raw_probs = softmax(dataset.logits(), 1.0);
  CalibratedOutput out;
  out.raw = predict(raw_probs, dataset.labels());

  std::visit(Overloaded{
                 [&](const std::monostate&) {
                   out.summary = out.raw;
                   out.probabilities = raw_probs.matrix();
                 },
                 [&](const TemperatureModel& m) {
                   const auto probs = apply_scaling(m, dataset.logits());
                   // The raw predicted class keeps the largest probability at any temperature.
                   out.summary = out.raw;
                   for (std::size_t i = 0; i < dataset.size(); ++i) {
                     out.summary.confidence[i] = probs(i, out.raw.predicted[i]);
                   }
                   out.probabilities = probs.matrix();
                 },
                 [&](const VectorModel& m) {
                   const auto probs = apply_scaling(m, dataset.logits());
                   out.summary = predict(probs, dataset.labels());
                   out.probabilities = probs.matrix();
                 },
                 [&](const DirichletModel& m) {
                   const auto probs = apply_scaling(m, dataset.logits());
                   out.summary = predict(probs, dataset.labels());
                   out.probabilities = probs.matrix();
                 },
                 [&](const BinaryModel& m) {
                   out.summary = out.raw;
                   for (double& s : out.summary.confidence) s = apply_binary(m, s);
                 },
                 [&](const OvaEnsemble& m) {
                   Matrix scores(dataset.size(), dataset.num_classes());
                   for (std::size_t i = 0; i < dataset.size(); ++i) ova_row(m, raw_probs.row(i), scores.row(i));
                   out.summary = summarize_scores(scores, dataset.labels());
                   out.probabilities = std::move(scores);
                 },
             },
             calibrator.model);
  return out;
}

MetricsReport evaluate(const LogitsDataset& dataset, const Calibrator& calibrator, std::size_t bin_count) {
  return summarize(apply_calibrator(calibrator, dataset).summary, bin_count);
}

}  // namespace tvacal
