#pragma once

#include <cstddef>
#include <cstdint>

#include "tvacal/dataset.hpp"

namespace tvacal {

/// Gaussian-logit generator with a known calibration state.
struct SynthSpec {
  std::size_t classes = 100;
  std::size_t samples = 10000;
  double scale = 2.0;        // standard deviation of the latent logits
  double temperature = 1.0;  // distortion: emitted logits are temperature * z
  std::uint64_t seed = 0;

  void validate() const;
};

/// For each sample (in order): draw L latent logits z_k = scale * N(0, 1), then
/// one uniform u and the label as the first k with u < cumsum(softmax(z))_k
/// (the last class if rounding leaves u uncovered). Emits temperature * z.
/// The latent model is calibrated by construction, so temperature > 1 gives
/// overconfident logits and temperature < 1 underconfident ones; scaling the
/// emitted logits by 1 / temperature restores calibration. Draws use Rng(seed).
LogitsDataset generate(const SynthSpec& spec);

/// Keeps the first m samples of every class, m being the smallest class count,
/// so every class appears exactly m times. Source order is preserved.
/// Throws InvalidInput if some class never occurs.
LogitsDataset balance_classes(const LogitsDataset& dataset);

}  // namespace tvacal
