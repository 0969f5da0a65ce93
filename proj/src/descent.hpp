#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tvacal/error.hpp"
#include "tvacal/scaling.hpp"

namespace tvacal::detail {

// Proximal gradient descent with a fixed step.
//
// `evaluate(x)` returns the full objective and the gradient of its smooth part;
// `prox(x, step)` applies the proximal map of the non-smooth / penalty part in
// place (projection, clamping, or closed-form quadratic shrinkage). Stops when
// the objective changes by less than `tolerance` between iterations.
template <typename Evaluate, typename Prox>
std::vector<double> proximal_descent(std::vector<double> x, Evaluate&& evaluate, Prox&& prox,
                                     const FitOptions& options, FitTrace* trace) {
  Evaluation current = evaluate(x);
  if (!std::isfinite(current.value)) throw OptimizationFailure("non-finite objective", 0);
  if (trace) {
    trace->objective.assign(1, current.value);
    trace->iterations = 0;
    trace->converged = false;
  }
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= options.learning_rate * current.gradient[i];
    prox(x, options.learning_rate);
    Evaluation next = evaluate(x);
    if (!std::isfinite(next.value)) throw OptimizationFailure("non-finite objective", it);
    for (double g : next.gradient) {
      if (!std::isfinite(g)) throw OptimizationFailure("non-finite gradient", it);
    }
    const double change = std::abs(current.value - next.value);
    current = std::move(next);
    if (trace) {
      trace->objective.push_back(current.value);
      trace->iterations = it;
    }
    if (change < options.tolerance) {
      if (trace) trace->converged = true;
      break;
    }
  }
  return x;
}

}  // namespace tvacal::detail
