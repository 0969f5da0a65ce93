#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tvacal/binary_methods.hpp"
#include "tvacal/dataset.hpp"
#include "tvacal/metrics.hpp"
#include "tvacal/scaling.hpp"

namespace tvacal {

// How a calibration method is lifted to the multiclass setting.
//   standard  scaling methods fit on the full logits with cross-entropy
//   ova       binary methods fit one calibrator per class on (f_k, 1[y = k])
//   tva       the single surrogate problem (confidence, prediction correct?):
//             scaling methods fit with the binary cross-entropy of the
//             confidence, binary methods fit on (s, y^b) and only remap s
enum class Mode { standard, ova, tva };

enum class Method { none, ts, vs, dc, hb, iso, beta, bbq };

std::string_view to_string(Mode mode);
std::string_view to_string(Method method);
Mode parse_mode(std::string_view name);
Method parse_method(std::string_view name);

bool is_scaling(Method method);
bool is_binary(Method method);

/// Scaling methods take standard or tva, binary methods take ova or tva, none takes standard.
bool is_valid_combination(Method method, Mode mode);

/// Human-readable list of accepted (method, mode) pairs.
std::string valid_combinations();

struct OvaEnsemble {
  std::vector<BinaryModel> members;  // one per class, in class order
  bool normalize = true;
};

using CalibratorModel =
    std::variant<std::monostate, TemperatureModel, VectorModel, DirichletModel, BinaryModel, OvaEnsemble>;

struct Calibrator {
  Mode mode = Mode::standard;
  Method method = Method::none;
  CalibratorModel model;
  std::vector<std::string> warnings;  // fit-time diagnostics, not serialized

  /// True for temperature scaling (either loss), every tva-wrapped binary method and the identity.
  bool prediction_preserving() const;

  /// Class count the model is tied to, or nullopt when it applies to any L.
  std::optional<std::size_t> num_classes() const;

  void validate() const;

  static Calibrator identity() { return Calibrator{}; }
};

struct CalibratorOptions {
  FitOptions scaling;  // the loss is set from the mode
  std::size_t bins = kDefaultHistogramBins;
  std::optional<HistogramScheme> histogram_scheme;  // empty: pick the better scheme on the calibration set
  std::vector<std::size_t> bbq_candidates;           // empty: default_bbq_candidates(N)
  BetaFitOptions beta;
  bool normalize = true;             // ova only
  bool init_from_temperature = false;  // vs / dc: start from 1/T of a temperature fit in the same mode
};

Calibrator fit_tva(Method method, const LogitsDataset& cal, const CalibratorOptions& options = {});
Calibrator fit_ova(Method method, const LogitsDataset& cal, const CalibratorOptions& options = {});
Calibrator fit_standard(Method method, const LogitsDataset& cal, const CalibratorOptions& options = {});

/// Dispatches on mode; throws InvalidParameter for an invalid (method, mode) pair.
Calibrator fit_calibrator(Method method, Mode mode, const LogitsDataset& cal, const CalibratorOptions& options = {});

struct CalibratedOutput {
  /// Calibrated class scores for scaling and ova calibrators (row-stochastic
  /// unless ova without normalization). Empty for tva binary calibrators, whose
  /// output is the remapped confidence only.
  std::optional<Matrix> probabilities;
  PredictionSummary summary;        // calibrated prediction and confidence
  PredictionSummary raw;            // uncalibrated softmax prediction and confidence
};

CalibratedOutput apply_calibrator(const Calibrator& calibrator, const LogitsDataset& dataset);

/// Metrics of the calibrated predictions.
MetricsReport evaluate(const LogitsDataset& dataset, const Calibrator& calibrator,
                       std::size_t bin_count = kDefaultEceBins);

}  // namespace tvacal
