#include "tvacal/binary_methods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tvacal/error.hpp"
#include "tvacal/metrics.hpp"

namespace tvacal {
namespace {

void check_set(const BinarySet& set) {
  if (set.scores.empty()) throw InvalidInput("empty calibration set");
  if (set.scores.size() != set.targets.size()) throw InvalidInput("score and target lengths differ");
  for (double s : set.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("score outside [0, 1]");
  }
  for (auto t : set.targets) {
    if (t > 1) throw InvalidInput("targets must be 0 or 1");
  }
}

void check_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) throw InvalidInput("score " + std::to_string(score) + " outside [0, 1]");
}

std::vector<double> sorted_scores(const BinarySet& set) {
  std::vector<double> s = set.scores;
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<double> equal_size_edges(std::size_t bins) {
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) edges[k] = static_cast<double>(k) / static_cast<double>(bins);
  return edges;
}

// Chunks of sizes differing by at most one, larger first; inner edges halfway
// between neighbouring chunks.
std::vector<double> equal_mass_edges(const std::vector<double>& sorted, std::size_t bins) {
  const std::size_t n = sorted.size();
  std::vector<double> edges(bins + 1);
  edges[0] = 0.0;
  edges[bins] = 1.0;
  std::size_t cumulative = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    cumulative += n / bins + (k - 1 < n % bins ? 1 : 0);
    if (cumulative == 0) {
      edges[k] = 0.0;
    } else if (cumulative >= n) {
      edges[k] = 1.0;
    } else {
      edges[k] = 0.5 * (sorted[cumulative - 1] + sorted[cumulative]);
    }
  }
  return edges;
}

struct BinCounts {
  std::vector<std::size_t> n;
  std::vector<std::size_t> positives;
};

BinCounts count_bins(const BinningModel& model, const BinarySet& set) {
  BinCounts c{std::vector<std::size_t>(model.bin_count(), 0), std::vector<std::size_t>(model.bin_count(), 0)};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t k = model.bin_index(set.scores[i]);
    ++c.n[k];
    c.positives[k] += set.targets[i];
  }
  return c;
}

double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

struct BetaFeatures {
  std::vector<double> log_s;             // ln s
  std::vector<double> neg_log_one_minus;  // -ln(1 - s)
};

BetaFeatures beta_features(const BinarySet& set) {
  BetaFeatures f;
  f.log_s.reserve(set.size());
  f.neg_log_one_minus.reserve(set.size());
  for (double s : set.scores) {
    const double sc = std::clamp(s, kConfidenceEpsilon, 1.0 - kConfidenceEpsilon);
    f.log_s.push_back(std::log(sc));
    f.neg_log_one_minus.push_back(-std::log1p(-sc));
  }
  return f;
}

double beta_nll_with(const BetaModel& m, const BetaFeatures& f, const BinarySet& set, double* grad) {
  double nll = 0.0;
  double ga = 0.0, gb = 0.0, gc = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double u = m.a * f.log_s[i] + m.b * f.neg_log_one_minus[i] + m.c;
    const bool y = set.targets[i] != 0;
    nll += y ? softplus(-u) : softplus(u);
    if (grad) {
      const double mu = 1.0 / (1.0 + std::exp(-u));
      const double r = mu - (y ? 1.0 : 0.0);
      ga += r * f.log_s[i];
      gb += r * f.neg_log_one_minus[i];
      gc += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(set.size());
  if (grad) {
    grad[0] = ga * inv_n;
    grad[1] = gb * inv_n;
    grad[2] = gc * inv_n;
  }
  return nll * inv_n;
}

}  // namespace

HistogramScheme parse_histogram_scheme(std::string_view name) {
  if (name == "equal_size") return HistogramScheme::equal_size;
  if (name == "equal_mass") return HistogramScheme::equal_mass;
  throw InvalidParameter("unknown histogram scheme '" + std::string(name) + "' (expected equal_size or equal_mass)");
}

std::string_view to_string(HistogramScheme scheme) {
  return scheme == HistogramScheme::equal_size ? "equal_size" : "equal_mass";
}

std::size_t BinningModel::bin_index(double score) const {
  // First inner edge >= score; scores above every inner edge fall in the last bin.
  const auto first = edges.begin() + 1;
  const auto last = edges.end() - 1;
  return static_cast<std::size_t>(std::lower_bound(first, last, score) - first);
}

void BinningModel::validate() const {
  if (values.empty() || edges.size() != values.size() + 1) {
    throw InvalidInput("binning model needs B >= 1 values and B + 1 edges");
  }
  if (edges.front() != 0.0 || edges.back() != 1.0) throw InvalidInput("binning edges must span [0, 1]");
  if (!std::is_sorted(edges.begin(), edges.end())) throw InvalidInput("binning edges must be non-decreasing");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("binning values must lie in [0, 1]");
  }
}

void IsotonicModel::validate() const {
  if (breakpoints.empty() || breakpoints.size() != values.size()) {
    throw InvalidInput("isotonic model needs matching, non-empty breakpoints and values");
  }
  if (std::adjacent_find(breakpoints.begin(), breakpoints.end(), std::greater_equal<>()) != breakpoints.end()) {
    throw InvalidInput("isotonic breakpoints must be strictly increasing");
  }
  if (!std::is_sorted(values.begin(), values.end())) throw InvalidInput("isotonic values must be non-decreasing");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("isotonic values must lie in [0, 1]");
  }
}

void BetaModel::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || a < 0.0 || b < 0.0) {
    throw InvalidInput("beta model needs finite a, b >= 0 and finite c");
  }
}

void BbqModel::validate() const {
  if (members.empty() || members.size() != weights.size()) {
    throw InvalidInput("BBQ model needs matching, non-empty members and weights");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("BBQ weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("BBQ weights must sum to 1");
  for (const auto& m : members) m.validate();
}

void ConstantModel::validate() const {
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidInput("constant model value must lie in [0, 1]");
}

void validate(const BinaryModel& model) {
  std::visit([](const auto& m) { m.validate(); }, model);
}

BinningModel fit_histogram(const BinarySet& set, std::size_t bin_count, HistogramScheme scheme) {
  check_set(set);
  if (bin_count < 1) throw InvalidParameter("bin count must be at least 1");
  BinningModel model;
  model.scheme = scheme;
  model.edges = scheme == HistogramScheme::equal_size ? equal_size_edges(bin_count)
                                                      : equal_mass_edges(sorted_scores(set), bin_count);
  model.values.assign(bin_count, 0.0);
  const auto counts = count_bins(model, set);
  for (std::size_t k = 0; k < bin_count; ++k) {
    model.values[k] = counts.n[k] > 0
                          ? static_cast<double>(counts.positives[k]) / static_cast<double>(counts.n[k])
                          : 0.5 * (model.edges[k] + model.edges[k + 1]);
  }
  return model;
}

BinningModel fit_histogram_best(const BinarySet& set, std::size_t bin_count) {
  auto calibration_ece = [&](const BinningModel& m) {
    std::vector<double> calibrated(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) calibrated[i] = apply_binary(m, set.scores[i]);
    return ece(calibrated, set.targets, kDefaultEceBins, BinScheme::equal_width);
  };
  auto size_model = fit_histogram(set, bin_count, HistogramScheme::equal_size);
  auto mass_model = fit_histogram(set, bin_count, HistogramScheme::equal_mass);
  return calibration_ece(mass_model) < calibration_ece(size_model) ? mass_model : size_model;
}

IsotonicModel fit_isotonic(const BinarySet& set) {
  check_set(set);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return set.scores[a] < set.scores[b]; });

  // Equal scores become one weighted point.
  IsotonicModel model;
  std::vector<double> sums;
  std::vector<double> weights;
  for (std::size_t idx : order) {
    const double s = set.scores[idx];
    if (model.breakpoints.empty() || model.breakpoints.back() != s) {
      model.breakpoints.push_back(s);
      sums.push_back(0.0);
      weights.push_back(0.0);
    }
    sums.back() += set.targets[idx];
    weights.back() += 1.0;
  }

  struct Block {
    double sum;
    double weight;
    std::size_t first;  // first point index covered
  };
  std::vector<Block> blocks;
  blocks.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    blocks.push_back({sums[i], weights[i], i});
    while (blocks.size() > 1) {
      const Block& prev = blocks[blocks.size() - 2];
      const Block& cur = blocks.back();
      if (prev.sum / prev.weight <= cur.sum / cur.weight) break;
      Block merged{prev.sum + cur.sum, prev.weight + cur.weight, prev.first};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }

  model.values.resize(sums.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t end = b + 1 < blocks.size() ? blocks[b + 1].first : sums.size();
    const double value = blocks[b].sum / blocks[b].weight;
    std::fill(model.values.begin() + static_cast<std::ptrdiff_t>(blocks[b].first),
              model.values.begin() + static_cast<std::ptrdiff_t>(end), value);
  }
  return model;
}

double beta_nll(const BetaModel& model, const BinarySet& set) {
  check_set(set);
  return beta_nll_with(model, beta_features(set), set, nullptr);
}

BetaModel fit_beta(const BinarySet& set, const BetaFitOptions& options, FitTrace* trace) {
  check_set(set);
  const std::size_t pos = set.positives();
  if (pos == 0 || pos == set.size()) throw DegenerateFit("beta calibration needs both target classes");
  if (options.max_iterations < 1 || !(options.tolerance > 0.0) || !(options.initial_step > 0.0)) {
    throw InvalidParameter("invalid beta fit options");
  }
  const auto features = beta_features(set);

  BetaModel model;
  double grad[3];
  double nll = beta_nll_with(model, features, set, grad);
  if (trace) {
    trace->objective.assign(1, nll);
    trace->iterations = 0;
    trace->converged = false;
  }
  double step = options.initial_step;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    BetaModel candidate;
    double candidate_nll = 0.0;
    bool accepted = false;
    while (step > 1e-16) {
      candidate.a = std::max(0.0, model.a - step * grad[0]);
      candidate.b = std::max(0.0, model.b - step * grad[1]);
      candidate.c = model.c - step * grad[2];
      const double da = candidate.a - model.a, db = candidate.b - model.b, dc = candidate.c - model.c;
      candidate_nll = beta_nll_with(candidate, features, set, nullptr);
      // Sufficient decrease for a projected step.
      if (std::isfinite(candidate_nll) && candidate_nll <= nll - (da * da + db * db + dc * dc) / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (trace) trace->converged = true;
      break;
    }
    const double decrease = nll - candidate_nll;
    model = candidate;
    nll = beta_nll_with(model, features, set, grad);
    if (!std::isfinite(nll)) throw OptimizationFailure("non-finite beta likelihood", it);
    if (trace) {
      trace->objective.push_back(nll);
      trace->iterations = it;
    }
    if (decrease < options.tolerance) {
      if (trace) trace->converged = true;
      break;
    }
    step = std::min(2.0 * step, options.initial_step);
  }
  return model;
}

std::vector<std::size_t> default_bbq_candidates(std::size_t sample_count) {
  std::size_t root = static_cast<std::size_t>(std::cbrt(static_cast<double>(sample_count)));
  while (root > 0 && root * root * root > sample_count) --root;
  while ((root + 1) * (root + 1) * (root + 1) <= sample_count) ++root;
  const std::size_t lo = std::clamp<std::size_t>(root > 7 ? root - 5 : 2, 2, 25);
  const std::size_t hi = std::clamp<std::size_t>(root + 5, 2, 25);
  std::vector<std::size_t> out;
  for (std::size_t b = lo; b <= hi; ++b) out.push_back(b);
  return out;
}

BbqModel fit_bbq(const BinarySet& set, std::span<const std::size_t> bin_count_candidates) {
  check_set(set);
  if (bin_count_candidates.empty()) throw InvalidParameter("BBQ needs at least one bin-count candidate");
  const auto sorted = sorted_scores(set);
  BbqModel model;
  std::vector<double> log_evidence;
  for (std::size_t bins : bin_count_candidates) {
    if (bins < 1) throw InvalidParameter("BBQ bin counts must be at least 1");
    BinningModel member;
    member.scheme = HistogramScheme::equal_mass;
    member.edges = equal_mass_edges(sorted, bins);
    member.values.assign(bins, 0.0);
    const auto counts = count_bins(member, set);
    double evidence = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double n = static_cast<double>(counts.n[k]);
      const double m = static_cast<double>(counts.positives[k]);
      member.values[k] = (m + 1.0) / (n + 2.0);
      // log B(m + 1, n - m + 1) - log B(1, 1)
      evidence += std::lgamma(m + 1.0) + std::lgamma(n - m + 1.0) - std::lgamma(n + 2.0);
    }
    model.members.push_back(std::move(member));
    log_evidence.push_back(evidence);
  }
  const double best = *std::max_element(log_evidence.begin(), log_evidence.end());
  double total = 0.0;
  for (double e : log_evidence) {
    model.weights.push_back(std::exp(e - best));
    total += model.weights.back();
  }
  for (double& w : model.weights) w /= total;
  // Members whose weight underflows to zero contribute nothing; drop them.
  for (std::size_t j = model.weights.size(); j-- > 0;) {
    if (model.weights[j] == 0.0) {
      model.weights.erase(model.weights.begin() + static_cast<std::ptrdiff_t>(j));
      model.members.erase(model.members.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  return model;
}

double apply_binary(const BinningModel& model, double score) {
  check_score(score);
  return model.values[model.bin_index(score)];
}

double apply_binary(const IsotonicModel& model, double score) {
  check_score(score);
  const auto it = std::upper_bound(model.breakpoints.begin(), model.breakpoints.end(), score);
  if (it == model.breakpoints.begin()) return model.values.front();
  return model.values[static_cast<std::size_t>(it - model.breakpoints.begin()) - 1];
}

double apply_binary(const BetaModel& model, double score) {
  check_score(score);
  const double sc = std::clamp(score, kConfidenceEpsilon, 1.0 - kConfidenceEpsilon);
  const double u = model.a * std::log(sc) - model.b * std::log1p(-sc) + model.c;
  return 1.0 / (1.0 + std::exp(-u));
}

double apply_binary(const BbqModel& model, double score) {
  check_score(score);
  double out = 0.0;
  for (std::size_t j = 0; j < model.members.size(); ++j) out += model.weights[j] * apply_binary(model.members[j], score);
  return std::clamp(out, 0.0, 1.0);
}

double apply_binary(const ConstantModel& model, double score) {
  check_score(score);
  return model.value;
}

double apply_binary(const BinaryModel& model, double score) {
  return std::visit([score](const auto& m) { return apply_binary(m, score); }, model);
}

}  // namespace tvacal
