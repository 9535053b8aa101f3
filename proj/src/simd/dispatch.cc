#include <cstdlib>
#include <stdexcept>
#include <string>

#include "exptree/simd.h"

namespace exptree::simd {
namespace {

constexpr KernelTable kScalarTable{
    Isa::kScalar, &detail::dot_scalar, &detail::matvec_scalar,
    &detail::rank1_update_scalar, &detail::squared_distances_scalar};

#ifdef EXPTREE_HAVE_AVX2
constexpr KernelTable kAvx2Table{
    Isa::kAvx2, &detail::dot_avx2, &detail::matvec_avx2,
    &detail::rank1_update_avx2, &detail::squared_distances_avx2};
#endif

#ifdef EXPTREE_HAVE_NEON
constexpr KernelTable kNeonTable{
    Isa::kNeon, &detail::dot_neon, &detail::matvec_neon,
    &detail::rank1_update_neon, &detail::squared_distances_neon};
#endif

const KernelTable& resolve() {
  if (const char* forced = std::getenv("EXPTREE_ISA")) {
    if (std::string(forced) == "scalar") return kScalarTable;
  }
  if (isa_available(Isa::kAvx2)) return kernels(Isa::kAvx2);
  if (isa_available(Isa::kNeon)) return kernels(Isa::kNeon);
  return kScalarTable;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#ifdef EXPTREE_HAVE_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#ifdef EXPTREE_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("instruction set not available: " +
                                std::string(isa_name(isa)));
  }
  switch (isa) {
#ifdef EXPTREE_HAVE_AVX2
    case Isa::kAvx2:
      return kAvx2Table;
#endif
#ifdef EXPTREE_HAVE_NEON
    case Isa::kNeon:
      return kNeonTable;
#endif
    default:
      return kScalarTable;
  }
}

const KernelTable& kernels() {
  static const KernelTable& table = resolve();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return kernels().dot(a.data(), b.data(), a.size());
}

void matvec(std::span<const double> m, std::span<const double> x,
            std::span<double> y) {
  const std::size_t n = x.size();
  if (m.size() != n * n || y.size() != n) {
    throw std::invalid_argument("matvec: size mismatch");
  }
  kernels().matvec(m.data(), x.data(), y.data(), n);
}

void rank1_update(std::span<double> m, std::span<const double> u,
                  double scale) {
  const std::size_t n = u.size();
  if (m.size() != n * n) {
    throw std::invalid_argument("rank1_update: size mismatch");
  }
  kernels().rank1_update(m.data(), u.data(), scale, n);
}

void squared_distances(std::span<const double> points, std::size_t dim,
                       std::span<const double> query, std::span<double> out) {
  if (query.size() != dim || points.size() != out.size() * dim) {
    throw std::invalid_argument("squared_distances: size mismatch");
  }
  kernels().squared_distances(points.data(), out.size(), dim, query.data(),
                              out.data());
}

}  // namespace exptree::simd
