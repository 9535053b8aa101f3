#include "exptree/theory.h"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace exptree::theory {
namespace {

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability outside [0,1]");
  }
}

void check_simplex(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("empty probability vector");
  for (double p : probs) check_prob(p);
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities must sum to 1");
  }
}

}  // namespace

void TheoryInputs::validate() const {
  check_simplex(region_probs);
  check_simplex(expert_shares);
  check_prob(left_prob);
  if (!(regret_constant > 0.0)) throw std::invalid_argument("c must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("T must be > 0");
}

double sqrt_regret(double c, double t) { return c * std::sqrt(t); }

double split_benefit_threshold(double left_prob, double c, double t) {
  check_prob(left_prob);
  if (!(t > 0.0)) throw std::invalid_argument("T must be > 0");
  return (std::sqrt(left_prob) + std::sqrt(1.0 - left_prob) - 1.0) *
         sqrt_regret(c, t) / t;
}

double split_regret_magnification(double left_prob) {
  check_prob(left_prob);
  return std::sqrt(left_prob) + std::sqrt(1.0 - left_prob);
}

double localized_regret_sum(std::span<const double> region_probs, double c,
                            double t) {
  check_simplex(region_probs);
  double total = 0.0;
  for (double p : region_probs) total += sqrt_regret(c, p * t);
  return total;
}

double nonlocal_lower_bound(double best_share, double t) {
  check_prob(best_share);
  return (1.0 - best_share) * t;
}

}  // namespace exptree::theory
