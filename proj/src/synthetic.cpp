#include "tvacal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tvacal/error.hpp"
#include "tvacal/rng.hpp"

namespace tvacal {

void SynthSpec::validate() const {
  if (classes < 2) throw InvalidParameter("synthetic data needs at least two classes");
  if (samples < 1) throw InvalidParameter("synthetic data needs at least one sample");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidParameter("logit scale must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidParameter("distortion temperature must be positive");
  }
}

LogitsDataset generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t L = spec.classes;
  Rng rng(spec.seed);
  std::vector<double> values(spec.samples * L);
  std::vector<Label> labels(spec.samples);
  std::vector<double> probs(L);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::span<double> z(values.data() + i * L, L);
    for (double& v : z) v = spec.scale * rng.normal();
    softmax_row(z, 1.0, probs);
    const double u = rng.uniform01();
    double cumulative = 0.0;
    Label label = static_cast<Label>(L - 1);
    for (std::size_t k = 0; k < L; ++k) {
      cumulative += probs[k];
      if (u < cumulative) {
        label = static_cast<Label>(k);
        break;
      }
    }
    labels[i] = label;
    for (double& v : z) v *= spec.temperature;
  }
  return LogitsDataset(Matrix(spec.samples, L, std::move(values)), std::move(labels));
}

LogitsDataset balance_classes(const LogitsDataset& dataset) {
  const std::size_t L = dataset.num_classes();
  std::vector<std::size_t> counts(L, 0);
  for (Label y : dataset.labels()) ++counts[y];
  const std::size_t per_class = *std::min_element(counts.begin(), counts.end());
  if (per_class == 0) throw InvalidInput("some class has no samples; cannot balance");
  std::vector<std::size_t> taken(L, 0);
  std::vector<std::size_t> rows;
  rows.reserve(per_class * L);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Label y = dataset.labels()[i];
    if (taken[y] < per_class) {
      ++taken[y];
      rows.push_back(i);
    }
  }
  return dataset.subset(rows);
}

}  // namespace tvacal
