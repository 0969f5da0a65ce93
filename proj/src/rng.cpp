#include "tvacal/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tvacal/error.hpp"

namespace tvacal {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw InvalidParameter("Rng::index requires n > 0");
  constexpr std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  // 2^64 mod n; outputs above max - rem fall in the incomplete last block.
  const std::uint64_t rem = (max % n + 1) % n;
  std::uint64_t x = engine_();
  if (rem != 0) {
    while (x > max - rem) x = engine_();
  }
  return x % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace tvacal
