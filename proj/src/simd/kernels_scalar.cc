// Reference kernels. These define the expected results for the vectorized
// variants and are the fallback on CPUs without a supported extension.

#include "exptree/simd.h"

namespace exptree::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_scalar(const double* m, const double* x, double* y,
                   std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_scalar(m + r * n, x, n);
}

void rank1_update_scalar(double* m, const double* u, double scale,
                         std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double s = scale * u[r];
    double* row = m + r * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += s * u[c];
  }
}

void squared_distances_scalar(const double* points, std::size_t count,
                              std::size_t dim, const double* query,
                              double* out) {
  for (std::size_t j = 0; j < count; ++j) {
    const double* p = points + j * dim;
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double diff = p[i] - query[i];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

}  // namespace exptree::simd::detail
