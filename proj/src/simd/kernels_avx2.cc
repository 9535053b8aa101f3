// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check.

#include <immintrin.h>

#include "exptree/simd.h"

namespace exptree::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_avx2(const double* m, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_avx2(m + r * n, x, n);
}

void rank1_update_avx2(double* m, const double* u, double scale,
                       std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double s = scale * u[r];
    const __m256d vs = _mm256_set1_pd(s);
    double* row = m + r * n;
    std::size_t c = 0;
    for (; c + 4 <= n; c += 4) {
      const __m256d cur = _mm256_loadu_pd(row + c);
      _mm256_storeu_pd(row + c,
                       _mm256_fmadd_pd(vs, _mm256_loadu_pd(u + c), cur));
    }
    for (; c < n; ++c) row[c] += s * u[c];
  }
}

void squared_distances_avx2(const double* points, std::size_t count,
                            std::size_t dim, const double* query,
                            double* out) {
  for (std::size_t j = 0; j < count; ++j) {
    const double* p = points + j * dim;
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) {
      const __m256d d =
          _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(query + i));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    double total = hsum(acc);
    for (; i < dim; ++i) {
      const double d = p[i] - query[i];
      total += d * d;
    }
    out[j] = total;
  }
}

}  // namespace exptree::simd::detail
