#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>

namespace tvacal::detail {

/// exp(x) for x <= 0, within a few ulp of std::exp; returns 0 below -708.
/// Branch-free so loops over it vectorize.
inline double exp_nonpositive(double x) {
  constexpr double log2e = 1.4426950408889634;
  constexpr double ln2_hi = 0.693145751953125;  // few mantissa bits, so k * ln2_hi is exact
  constexpr double ln2_lo = 1.4286068203094173e-06;
  constexpr double shifter = 0x1.8p52;

  const double clamped = std::max(x, -708.0);
  const double kd = clamped * log2e + shifter;  // round to nearest integer
  const double k = kd - shifter;
  const double r = (clamped - k * ln2_hi) - k * ln2_lo;

  // Taylor series to r^13 / 13!, |r| <= ln(2) / 2.
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  // 2^k from the low bits of kd, which hold k.
  const std::uint64_t bits = (std::bit_cast<std::uint64_t>(kd) + 1023u) << 52;
  const double result = p * std::bit_cast<double>(bits);
  return result * static_cast<double>(x >= -708.0);
}

}  // namespace tvacal::detail
