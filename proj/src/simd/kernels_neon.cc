// NEON kernels for AArch64 (two doubles per register).

#include "exptree/simd.h"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace exptree::simd::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_neon(const double* m, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_neon(m + r * n, x, n);
}

void rank1_update_neon(double* m, const double* u, double scale,
                       std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double s = scale * u[r];
    const float64x2_t vs = vdupq_n_f64(s);
    double* row = m + r * n;
    std::size_t c = 0;
    for (; c + 2 <= n; c += 2) {
      vst1q_f64(row + c, vfmaq_f64(vld1q_f64(row + c), vs, vld1q_f64(u + c)));
    }
    for (; c < n; ++c) row[c] += s * u[c];
  }
}

void squared_distances_neon(const double* points, std::size_t count,
                            std::size_t dim, const double* query,
                            double* out) {
  for (std::size_t j = 0; j < count; ++j) {
    const double* p = points + j * dim;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= dim; i += 2) {
      const float64x2_t d = vsubq_f64(vld1q_f64(p + i), vld1q_f64(query + i));
      acc = vfmaq_f64(acc, d, d);
    }
    double total = vaddvq_f64(acc);
    for (; i < dim; ++i) {
      const double d = p[i] - query[i];
      total += d * d;
    }
    out[j] = total;
  }
}

}  // namespace exptree::simd::detail

#endif  // __aarch64__
