#pragma once

#include <cstddef>

namespace tvacal::detail {

/// out[i] = exp(scale * x[i]) for x[i] * scale <= 0, using exp_nonpositive.
/// Results are identical on every code path the dispatcher may pick.
void exp_scaled(const double* x, double* out, std::size_t n, double scale);

}  // namespace tvacal::detail
