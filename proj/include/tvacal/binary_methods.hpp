#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "tvacal/dataset.hpp"
#include "tvacal/scaling.hpp"

namespace tvacal {

inline constexpr std::size_t kDefaultHistogramBins = 10;

enum class HistogramScheme { equal_size, equal_mass };

HistogramScheme parse_histogram_scheme(std::string_view name);
std::string_view to_string(HistogramScheme scheme);

/// Piecewise-constant map over B bins. Bin 0 is [edges[0], edges[1]], bin k > 0
/// is (edges[k], edges[k+1]].
struct BinningModel {
  HistogramScheme scheme = HistogramScheme::equal_size;
  std::vector<double> edges;   // B + 1 values, edges[0] = 0, edges[B] = 1
  std::vector<double> values;  // B values in [0, 1]

  std::size_t bin_count() const noexcept { return values.size(); }
  std::size_t bin_index(double score) const;
  void validate() const;
};

/// Step function: breakpoints strictly increasing, values non-decreasing.
struct IsotonicModel {
  std::vector<double> breakpoints;
  std::vector<double> values;

  void validate() const;
};

/// mu(s) = sigmoid(a ln s - b ln(1 - s) + c) with a, b >= 0.
struct BetaModel {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  void validate() const;
};

/// Weighted average of equal-mass binning members.
struct BbqModel {
  std::vector<BinningModel> members;
  std::vector<double> weights;  // positive, summing to 1

  void validate() const;
};

/// s -> value for every s. Stands in for a per-class member without both target classes.
struct ConstantModel {
  double value = 0.0;

  void validate() const;
};

using BinaryModel = std::variant<BinningModel, IsotonicModel, BetaModel, BbqModel, ConstantModel>;

/// Per-bin mean target; an empty bin takes its midpoint. Equal-mass inner
/// edges sit halfway between the last score of one chunk and the first of the next.
BinningModel fit_histogram(const BinarySet& set, std::size_t bin_count = kDefaultHistogramBins,
                           HistogramScheme scheme = HistogramScheme::equal_size);

/// Fits both schemes and keeps the one with the lower ECE (15 equal-width bins)
/// on `set` itself; ties keep equal-size.
BinningModel fit_histogram_best(const BinarySet& set, std::size_t bin_count = kDefaultHistogramBins);

/// Pool-adjacent-violators least-squares fit. Equal scores are merged first.
IsotonicModel fit_isotonic(const BinarySet& set);

struct BetaFitOptions {
  std::size_t max_iterations = 5000;
  double tolerance = 1e-12;  // on the NLL decrease
  double initial_step = 1.0;
};

/// Maximum likelihood by projected gradient descent with backtracking, starting
/// from the identity (a = b = 1, c = 0). Throws DegenerateFit for single-class targets.
BetaModel fit_beta(const BinarySet& set, const BetaFitOptions& options = {}, FitTrace* trace = nullptr);

/// Mean negative log-likelihood of the beta map on `set`.
double beta_nll(const BetaModel& model, const BinarySet& set);

/// All integers in [max(2, floor(cbrt(n)) - 5), floor(cbrt(n)) + 5], clamped to [2, 25].
std::vector<std::size_t> default_bbq_candidates(std::size_t sample_count);

/// One equal-mass member per candidate bin count with posterior-mean values
/// (m + 1) / (n + 2), weighted by its Beta(1, 1) marginal likelihood.
BbqModel fit_bbq(const BinarySet& set, std::span<const std::size_t> bin_count_candidates);

/// Calibrated score. Throws InvalidInput for a score outside [0, 1].
double apply_binary(const BinaryModel& model, double score);
double apply_binary(const BinningModel& model, double score);
double apply_binary(const IsotonicModel& model, double score);
double apply_binary(const BetaModel& model, double score);
double apply_binary(const BbqModel& model, double score);
double apply_binary(const ConstantModel& model, double score);

void validate(const BinaryModel& model);

}  // namespace tvacal
