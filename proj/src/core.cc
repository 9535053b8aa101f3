#include "exptree/core.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace exptree {

AdviceMatrix::AdviceMatrix(int n_experts, int n_arms)
    : AdviceMatrix(n_experts, n_arms,
                   std::vector<double>(static_cast<std::size_t>(
                                           std::max(n_experts, 0)) *
                                           std::max(n_arms, 0),
                                       0.0)) {}

AdviceMatrix::AdviceMatrix(int n_experts, int n_arms,
                           std::vector<double> values)
    : n_experts_(n_experts), n_arms_(n_arms), values_(std::move(values)) {
  if (n_experts < 1) throw std::invalid_argument("advice: need N >= 1");
  if (n_arms < 2) throw std::invalid_argument("advice: need K >= 2");
  if (values_.size() != static_cast<std::size_t>(n_experts) * n_arms) {
    throw std::invalid_argument("advice: value count != N*K");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("advice: entry outside [0,1]");
    }
  }
}

void AdviceMatrix::set(int expert, int arm, double value) {
  values_[static_cast<std::size_t>(expert) * n_arms_ + arm] =
      std::clamp(value, 0.0, 1.0);
}

ExpertiseContext::ExpertiseContext(std::vector<double> v)
    : values(std::move(v)) {
  for (double& x : values) x = std::clamp(x, 0.0, 1.0);
}

void ActionDistribution::validate() const {
  if (probs.empty()) throw std::logic_error("distribution: no arms");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::logic_error("distribution: negative mass");
    if (floor > 0.0 && p < floor - kFloorSlack) {
      throw std::logic_error("distribution: mass below exploration floor");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw std::logic_error("distribution: probabilities sum to " +
                           std::to_string(sum));
  }
}

void History::append(Experience e) {
  if (!items_.empty() && e.time_index <= items_.back().time_index) {
    throw std::invalid_argument("history: time_index must increase");
  }
  if (!(e.reward >= 0.0 && e.reward <= 1.0)) {
    throw std::invalid_argument("history: reward outside [0,1]");
  }
  if (!(e.propensity > 0.0 && e.propensity <= 1.0)) {
    throw std::invalid_argument("history: propensity outside (0,1]");
  }
  items_.push_back(std::move(e));
}

Decision sample_arm(const ActionDistribution& dist, Rng& rng) {
  dist.validate();
  // 53 random mantissa bits -> u in [0,1).
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  int last_positive = 0;
  for (int k = 0; k < dist.n_arms(); ++k) {
    const double p = dist.probs[static_cast<std::size_t>(k)];
    if (p <= 0.0) continue;
    last_positive = k;
    cumulative += p;
    if (u < cumulative) return {k, p};
  }
  // Rounding left u above the accumulated mass.
  return {last_positive, dist.probs[static_cast<std::size_t>(last_positive)]};
}

void check_experience(const Experience& e, int n_experts, int n_arms) {
  if (e.advice.n_experts() != n_experts || e.advice.n_arms() != n_arms) {
    throw std::invalid_argument("experience: advice dimensions mismatch");
  }
  if (e.arm < 0 || e.arm >= n_arms) {
    throw std::invalid_argument("experience: arm out of range");
  }
  if (!(e.propensity > 0.0)) {
    throw std::invalid_argument("experience: propensity must be > 0");
  }
  if (!(e.reward >= 0.0 && e.reward <= 1.0)) {
    throw std::invalid_argument("experience: reward outside [0,1]");
  }
}

namespace detail {

void check_replay_tuple(const Experience& e, const Experience& first) {
  if (!(e.propensity > 0.0)) {
    throw std::invalid_argument("replay: non-positive propensity");
  }
  if (e.advice.n_experts() != first.advice.n_experts() ||
      e.advice.n_arms() != first.advice.n_arms()) {
    throw std::invalid_argument("replay: advice dimensions differ in log");
  }
}

}  // namespace detail

bool split_beneficial(double left_sum, double right_sum, double own_sum) {
  return left_sum + right_sum > own_sum;
}

bool split_beneficial_weighted(double left_quality, std::size_t left_count,
                               double right_quality, std::size_t right_count,
                               double own_quality, std::size_t own_count) {
  return left_quality * static_cast<double>(left_count) +
             right_quality * static_cast<double>(right_count) >
         own_quality * static_cast<double>(own_count);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace exptree
