#include "kernels.hpp"

#include "fast_exp.hpp"

// The avx2 clone does not enable FMA, so it rounds exactly like the default one.
#if defined(__x86_64__) && defined(__linux__) && defined(__GNUC__)
#define TVACAL_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define TVACAL_CLONES
#endif

namespace tvacal::detail {

TVACAL_CLONES void exp_scaled(const double* __restrict x, double* __restrict out, std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) out[i] = exp_nonpositive(x[i] * scale);
}

}  // namespace tvacal::detail
