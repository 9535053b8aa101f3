#pragma once

// Dense double-precision kernels used by the leaf learners and the
// nearest-neighbour scan. Every kernel has a scalar reference
// implementation; vectorized variants (AVX2+FMA on x86-64, NEON on
// AArch64) are selected once at runtime from what the CPU reports.
//
// Setting EXPTREE_ISA=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace exptree::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

// Function pointer table for one instruction set.
struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = M x for a row-major n x n matrix.
  void (*matvec)(const double* m, const double* x, double* y, std::size_t n);
  // M += scale * u u^T for a row-major n x n matrix.
  void (*rank1_update)(double* m, const double* u, double scale,
                       std::size_t n);
  // out[j] = ||points[j] - query||^2, points row-major count x dim.
  void (*squared_distances)(const double* points, std::size_t count,
                            std::size_t dim, const double* query,
                            double* out);
};

bool isa_available(Isa isa);

// Table for a specific ISA. Throws std::invalid_argument when the ISA is
// not compiled in or not supported by this CPU.
const KernelTable& kernels(Isa isa);

// Best available table; resolved on first use.
const KernelTable& kernels();

inline Isa active_isa() { return kernels().isa; }

// Span conveniences over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void matvec(std::span<const double> m, std::span<const double> x,
            std::span<double> y);
void rank1_update(std::span<double> m, std::span<const double> u,
                  double scale);
void squared_distances(std::span<const double> points, std::size_t dim,
                       std::span<const double> query, std::span<double> out);

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void matvec_scalar(const double* m, const double* x, double* y,
                   std::size_t n);
void rank1_update_scalar(double* m, const double* u, double scale,
                         std::size_t n);
void squared_distances_scalar(const double* points, std::size_t count,
                              std::size_t dim, const double* query,
                              double* out);

#if defined(__x86_64__) || defined(_M_X64)
#define EXPTREE_HAVE_AVX2 1
double dot_avx2(const double* a, const double* b, std::size_t n);
void matvec_avx2(const double* m, const double* x, double* y, std::size_t n);
void rank1_update_avx2(double* m, const double* u, double scale,
                       std::size_t n);
void squared_distances_avx2(const double* points, std::size_t count,
                            std::size_t dim, const double* query,
                            double* out);
#endif

#if defined(__aarch64__)
#define EXPTREE_HAVE_NEON 1
double dot_neon(const double* a, const double* b, std::size_t n);
void matvec_neon(const double* m, const double* x, double* y, std::size_t n);
void rank1_update_neon(double* m, const double* u, double scale,
                       std::size_t n);
void squared_distances_neon(const double* points, std::size_t count,
                            std::size_t dim, const double* query,
                            double* out);
#endif

}  // namespace detail
}  // namespace exptree::simd
