#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tvacal/dataset.hpp"

namespace tvacal {

inline constexpr std::size_t kDefaultEceBins = 15;

enum class BinScheme { equal_width, equal_mass };

BinScheme parse_bin_scheme(std::string_view name);
std::string_view to_string(BinScheme scheme);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;         // 0 for an empty bin
  double mean_confidence = 0.0;  // 0 for an empty bin
};

struct ReliabilityDiagram {
  BinScheme scheme = BinScheme::equal_width;
  std::vector<ReliabilityBin> bins;

  std::size_t total() const;
};

/// Bins (confidence, correctness) pairs.
///
/// Equal-width: edges k/B; bin 0 is [0, 1/B], bin k > 0 is (k/B, (k+1)/B].
/// Equal-mass: samples sorted by confidence (stable, so ties keep sample order)
/// are cut into B consecutive chunks whose sizes differ by at most one, larger
/// chunks first. Bin 0 starts at 0, the last bin ends at 1 and inner edges are
/// the largest confidence of the chunk below.
ReliabilityDiagram reliability_diagram(std::span<const double> confidence,
                                       std::span<const std::uint8_t> correct,
                                       std::size_t bin_count = kDefaultEceBins,
                                       BinScheme scheme = BinScheme::equal_width);

/// Expected calibration error: sum_b (n_b / N) |acc(b) - conf(b)|.
double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct,
           std::size_t bin_count = kDefaultEceBins, BinScheme scheme = BinScheme::equal_width);

double ece(const ReliabilityDiagram& diagram);

/// Brier score of the predicted class: mean (s_i - y_i)^2.
double brier(std::span<const double> confidence, std::span<const std::uint8_t> correct);

/// Mann-Whitney AUROC with average ranks for ties. Throws UndefinedMetric
/// unless both classes are present.
double auroc(std::span<const double> confidence, std::span<const std::uint8_t> correct);

struct MetricsReport {
  double ece = 0.0;
  double ece_equal_mass = 0.0;
  double brier = 0.0;
  std::optional<double> auroc;  // empty when all predictions are right, or all wrong
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

MetricsReport summarize(const PredictionSummary& summary, std::size_t bin_count = kDefaultEceBins);

/// CSV with header bin_lower,bin_upper,count,accuracy,mean_confidence.
void write_diagram_csv(const ReliabilityDiagram& diagram, std::ostream& out);

}  // namespace tvacal
