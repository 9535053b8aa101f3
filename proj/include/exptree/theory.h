#pragma once

// Closed forms for the cost of splitting (and of not splitting) under a
// regret model R(T) = c * sqrt(T). All functions are pure.

#include <cstdint>
#include <span>
#include <vector>

namespace exptree::theory {

struct TheoryInputs {
  std::vector<double> region_probs;   // p(Z)
  std::vector<double> expert_shares;  // p'(n)
  double left_prob = 0.5;             // probability a context routes left
  double regret_constant = 1.0;       // c
  double horizon = 1.0;               // T
  void validate() const;
};

// R(T) = c sqrt(T)
double sqrt_regret(double c, double t);

// Largest reward gap for which a split at routing probability `left_prob`
// is still detrimental: (sqrt(p) + sqrt(1-p) - 1) * c sqrt(T) / T.
double split_benefit_threshold(double left_prob, double c, double t);

// Regret inflation of an unnecessary split: sqrt(p) + sqrt(1-p).
double split_regret_magnification(double left_prob);

// Total regret of one learner per region: sum_Z c sqrt(p(Z) T).
double localized_regret_sum(std::span<const double> region_probs, double c,
                            double t);

// Linear lower bound for any context-blind algorithm: (1 - p'_max) T.
double nonlocal_lower_bound(double best_share, double t);

}  // namespace exptree::theory
