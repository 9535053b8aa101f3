#pragma once

// Domain types shared by every learner: advice matrices, contexts, action
// distributions, logged experiences, and the importance-weighted
// progressive quality estimate used to compare learners on a log.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace exptree {

using Rng = std::mt19937_64;

// Tolerance on the sum of an ActionDistribution.
inline constexpr double kProbSumTolerance = 1e-9;
// Slack allowed below the exploration floor.
inline constexpr double kFloorSlack = 1e-12;

// N x K matrix of per-expert reward estimates, entries in [0,1].
class AdviceMatrix {
 public:
  AdviceMatrix() = default;
  // Zero-filled.
  AdviceMatrix(int n_experts, int n_arms);
  // Row-major values; throws if any entry falls outside [0,1].
  AdviceMatrix(int n_experts, int n_arms, std::vector<double> values);

  int n_experts() const { return n_experts_; }
  int n_arms() const { return n_arms_; }

  double operator()(int expert, int arm) const {
    return values_[static_cast<std::size_t>(expert) * n_arms_ + arm];
  }
  // Clamps to [0,1].
  void set(int expert, int arm, double value);

  std::span<const double> row(int expert) const {
    return {values_.data() + static_cast<std::size_t>(expert) * n_arms_,
            static_cast<std::size_t>(n_arms_)};
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const AdviceMatrix&) const = default;

 private:
  int n_experts_ = 0;
  int n_arms_ = 0;
  std::vector<double> values_;
};

// The observable subset z of the full context, clipped to [0,1].
struct ExpertiseContext {
  std::vector<double> values;

  ExpertiseContext() = default;
  explicit ExpertiseContext(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const ExpertiseContext&) const = default;
};

struct FullContext {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
};

struct ActionDistribution {
  std::vector<double> probs;
  // Minimum per-arm probability guaranteed by the producing policy; 0 when
  // no floor is active.
  double floor = 0.0;

  int n_arms() const { return static_cast<int>(probs.size()); }
  // Throws std::logic_error when the sum, non-negativity, or floor
  // invariants are violated.
  void validate() const;
};

struct Experience {
  AdviceMatrix advice;
  int arm = 0;
  double reward = 0.0;
  double propensity = 1.0;
  ExpertiseContext expertise_ctx;
  std::int64_t time_index = 0;
};

// Chronological log. append() rejects out-of-order time indices, rewards
// outside [0,1] and non-positive propensities.
class History {
 public:
  void append(Experience e);
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Experience& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  void reserve(std::size_t n) { items_.reserve(n); }

 private:
  std::vector<Experience> items_;
};

// Outcome of acting: the sampled arm and the probability it had.
struct Decision {
  int arm = 0;
  double propensity = 1.0;
};

// Samples an arm from `dist`. Uses exactly one 64-bit draw from `rng`.
Decision sample_arm(const ActionDistribution& dist, Rng& rng);

// Validates an experience against the acting dimensions.
void check_experience(const Experience& e, int n_experts, int n_arms);

// Anything with act(advice) -> distribution and update(experience).
template <typename L>
concept BanditLearner = requires(L l, const L cl, const AdviceMatrix& a,
                                 const Experience& e) {
  { cl.act(a) } -> std::convertible_to<ActionDistribution>;
  l.update(e);
};

// Importance-weighted term pi_k(xi) * r / p for one logged tuple.
template <BanditLearner L>
double ips_term(const L& learner, const Experience& e) {
  const ActionDistribution d = learner.act(e.advice);
  return d.probs[static_cast<std::size_t>(e.arm)] * e.reward / e.propensity;
}

namespace detail {
void check_replay_tuple(const Experience& e, const Experience& first);
}

// Progressive (prequential) IPS replay: each tuple is scored with the
// learner's state before it is updated on that tuple. Returns the summed
// weighted reward (the quality estimate times |history|) and the learner
// trained on the whole history.
template <BanditLearner L>
std::pair<double, L> ips_progressive_quality(
    const std::function<L()>& factory, const History& history) {
  L learner = factory();
  double total = 0.0;
  for (const Experience& e : history) {
    detail::check_replay_tuple(e, history[0]);
    total += ips_term(learner, e);
    learner.update(e);
  }
  return {total, std::move(learner)};
}

// Decision rule for a split, in both algebraic forms. The sum form compares
// the progressive sums directly; the average form rescales per-set average
// qualities by their set sizes.
bool split_beneficial(double left_sum, double right_sum, double own_sum);
bool split_beneficial_weighted(double left_quality, std::size_t left_count,
                               double right_quality, std::size_t right_count,
                               double own_quality, std::size_t own_count);

// Abstract acting policy driven by the experiment loop.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Decision act(const AdviceMatrix& advice, const ExpertiseContext& z,
                       Rng& rng) = 0;
  virtual void update(const Experience& e) = 0;
};

// splitmix64 mix of (seed, stream); used to derive independent RNG streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace exptree
