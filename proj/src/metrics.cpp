#include "tvacal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "tvacal/error.hpp"
#include "tvacal/format.hpp"

namespace tvacal {
namespace {

void check_pairs(std::span<const double> confidence, std::span<const std::uint8_t> correct) {
  if (confidence.empty()) throw InvalidInput("no samples");
  if (confidence.size() != correct.size()) {
    throw InvalidInput("confidence and correctness lengths differ (" + std::to_string(confidence.size()) +
                       " vs " + std::to_string(correct.size()) + ")");
  }
}

std::size_t equal_width_bin(double s, std::size_t bins) {
  const double b = static_cast<double>(bins);
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(s * b)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
  // Correct for rounding in s * B so membership follows the edges k / B exactly.
  while (idx > 0 && s <= static_cast<double>(idx) / b) --idx;
  while (idx + 1 < static_cast<std::ptrdiff_t>(bins) && s > static_cast<double>(idx + 1) / b) ++idx;
  return static_cast<std::size_t>(idx);
}

}  // namespace

BinScheme parse_bin_scheme(std::string_view name) {
  if (name == "equal_width") return BinScheme::equal_width;
  if (name == "equal_mass") return BinScheme::equal_mass;
  throw InvalidParameter("unknown bin scheme '" + std::string(name) + "' (expected equal_width or equal_mass)");
}

std::string_view to_string(BinScheme scheme) {
  return scheme == BinScheme::equal_width ? "equal_width" : "equal_mass";
}

std::size_t ReliabilityDiagram::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

ReliabilityDiagram reliability_diagram(std::span<const double> confidence,
                                       std::span<const std::uint8_t> correct, std::size_t bin_count,
                                       BinScheme scheme) {
  check_pairs(confidence, correct);
  if (bin_count < 1) throw InvalidParameter("bin count must be at least 1");
  for (double s : confidence) {
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("confidence outside [0, 1]");
  }

  ReliabilityDiagram diagram;
  diagram.scheme = scheme;
  diagram.bins.resize(bin_count);
  std::vector<double> hits(bin_count, 0.0);
  std::vector<double> conf_sum(bin_count, 0.0);

  const double b = static_cast<double>(bin_count);
  if (scheme == BinScheme::equal_width) {
    for (std::size_t k = 0; k < bin_count; ++k) {
      diagram.bins[k].lower = static_cast<double>(k) / b;
      diagram.bins[k].upper = static_cast<double>(k + 1) / b;
    }
    for (std::size_t i = 0; i < confidence.size(); ++i) {
      const std::size_t k = equal_width_bin(confidence[i], bin_count);
      ++diagram.bins[k].count;
      hits[k] += correct[i];
      conf_sum[k] += confidence[i];
    }
  } else {
    std::vector<std::size_t> order(confidence.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return confidence[a] < confidence[c]; });
    const std::size_t n = order.size();
    const std::size_t base = n / bin_count;
    const std::size_t extra = n % bin_count;
    std::size_t pos = 0;
    double edge = 0.0;
    for (std::size_t k = 0; k < bin_count; ++k) {
      const std::size_t size = base + (k < extra ? 1 : 0);
      auto& bin = diagram.bins[k];
      bin.lower = edge;
      bin.count = size;
      for (std::size_t j = pos; j < pos + size; ++j) {
        hits[k] += correct[order[j]];
        conf_sum[k] += confidence[order[j]];
      }
      pos += size;
      if (size > 0) edge = confidence[order[pos - 1]];
      bin.upper = (k + 1 == bin_count) ? 1.0 : edge;
    }
  }

  for (std::size_t k = 0; k < bin_count; ++k) {
    auto& bin = diagram.bins[k];
    if (bin.count > 0) {
      bin.accuracy = hits[k] / static_cast<double>(bin.count);
      bin.mean_confidence = conf_sum[k] / static_cast<double>(bin.count);
    }
  }
  return diagram;
}

double ece(const ReliabilityDiagram& diagram) {
  const double n = static_cast<double>(diagram.total());
  if (n == 0.0) throw InvalidInput("ECE of an empty diagram");
  double sum = 0.0;
  for (const auto& bin : diagram.bins) {
    if (bin.count == 0) continue;
    sum += static_cast<double>(bin.count) / n * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return sum;
}

double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct, std::size_t bin_count,
           BinScheme scheme) {
  return ece(reliability_diagram(confidence, correct, bin_count, scheme));
}

double brier(std::span<const double> confidence, std::span<const std::uint8_t> correct) {
  check_pairs(confidence, correct);
  double sum = 0.0;
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double d = confidence[i] - static_cast<double>(correct[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(confidence.size());
}

double auroc(std::span<const double> confidence, std::span<const std::uint8_t> correct) {
  check_pairs(confidence, correct);
  const std::size_t n = confidence.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidence[a] < confidence[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && confidence[order[j + 1]] == confidence[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their average.
    const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (correct[order[k]]) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("AUROC needs at least one correct and one incorrect sample");
  }
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

MetricsReport summarize(const PredictionSummary& summary, std::size_t bin_count) {
  MetricsReport r;
  r.ece = ece(summary.confidence, summary.correct, bin_count, BinScheme::equal_width);
  r.ece_equal_mass = ece(summary.confidence, summary.correct, bin_count, BinScheme::equal_mass);
  r.brier = brier(summary.confidence, summary.correct);
  try {
    r.auroc = auroc(summary.confidence, summary.correct);
  } catch (const UndefinedMetric&) {
    r.auroc.reset();
  }
  r.accuracy = summary.accuracy();
  r.mean_confidence = summary.mean_confidence();
  return r;
}

void write_diagram_csv(const ReliabilityDiagram& diagram, std::ostream& out) {
  out << "bin_lower,bin_upper,count,accuracy,mean_confidence\n";
  for (const auto& bin : diagram.bins) {
    out << format_double(bin.lower) << ',' << format_double(bin.upper) << ',' << bin.count << ','
        << format_double(bin.accuracy) << ',' << format_double(bin.mean_confidence) << '\n';
  }
}

}  // namespace tvacal
