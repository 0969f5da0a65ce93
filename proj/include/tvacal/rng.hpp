#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace tvacal {

// Seeded generator used for splits and synthetic data.
//
// The engine is std::mt19937_64 (MT19937-64, default seeding). Every draw is
// derived from raw 64-bit outputs with the rules below, never through the
// <random> distributions, whose algorithms are implementation-defined:
//
//   uniform01()      (x >> 11) * 2^-53, in [0, 1)
//   index(n)         rejection sampling: draw x until x < floor(2^64 / n) * n,
//                    return x % n
//   normal()         Box-Muller cosine branch with u1 = 1 - uniform01(),
//                    u2 = uniform01(): sqrt(-2 ln u1) * cos(2 pi u2)
//   shuffle(span)    Fisher-Yates from the back: for i = n-1 .. 1,
//                    swap(a[i], a[index(i + 1)])
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t index(std::uint64_t n);

  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tvacal
