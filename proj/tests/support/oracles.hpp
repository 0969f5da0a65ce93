#pragma once

// Slow reference implementations used to check the library.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace tvacal::oracle {

/// Pairwise win count over (positive, negative) pairs, ties counting one half.
inline double auroc(std::span<const double> score, std::span<const std::uint8_t> target) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!target[i]) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (target[j]) continue;
      pairs += 1.0;
      if (score[i] > score[j]) wins += 1.0;
      else if (score[i] == score[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct IsotonicFit {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

/// Isotonic regression by repeated pooling: group equal scores, then merge the
/// first adjacent pair of blocks that violates monotonicity until none does.
inline IsotonicFit isotonic(std::span<const double> score, std::span<const std::uint8_t> target) {
  struct Block {
    double sum;
    double weight;
    std::size_t points;
  };
  std::vector<std::size_t> order(score.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] < score[b]; });

  IsotonicFit fit;
  std::vector<Block> blocks;
  for (auto i : order) {
    if (fit.breakpoints.empty() || fit.breakpoints.back() != score[i]) {
      fit.breakpoints.push_back(score[i]);
      blocks.push_back({0.0, 0.0, 1});
    }
    blocks.back().sum += target[i];
    blocks.back().weight += 1.0;
  }

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
      if (blocks[b].sum / blocks[b].weight > blocks[b + 1].sum / blocks[b + 1].weight) {
        blocks[b].sum += blocks[b + 1].sum;
        blocks[b].weight += blocks[b + 1].weight;
        blocks[b].points += blocks[b + 1].points;
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(b) + 1);
        merged = true;
        break;
      }
    }
  }
  for (const auto& b : blocks) fit.values.insert(fit.values.end(), b.points, b.sum / b.weight);
  return fit;
}

}  // namespace tvacal::oracle
