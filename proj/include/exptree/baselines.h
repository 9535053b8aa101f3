#pragma once

// Competing strategies for acting on localized expert advice:
//  * FlatPolicy      - one leaf learner that ignores the expertise context.
//  * NearestPolicy   - Nearest-p%: retrain a fresh learner each round on the
//                      p% of past experiences closest in expertise context.
//  * ReductionPolicy - treat each expert as an arm of a contextual bandit
//                      over z; per-expert regression trees with bootstrap
//                      Thompson selection, then follow that expert's advice.
//  * OraclePolicy    - one leaf learner per ground-truth region.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "exptree/core.h"
#include "exptree/env.h"
#include "exptree/learners.h"

namespace exptree {

class FlatPolicy final : public Policy {
 public:
  explicit FlatPolicy(const LearnerConfig& config) : learner_(fresh(config)) {}
  Decision act(const AdviceMatrix& advice, const ExpertiseContext&,
               Rng& rng) override {
    return sample_arm(learner_.act(advice), rng);
  }
  void update(const Experience& e) override { learner_.update(e); }
  const Learner& learner() const { return learner_; }

 private:
  Learner learner_;
};

// -- Nearest p% ---------------------------------------------------------------

struct NearestConfig {
  double percent = 10.0;  // in (0, 100]
  LearnerConfig learner;
  void validate() const;
};

// ceil(p / 100 * t), clamped to t.
std::size_t neighbor_count(double percent, std::size_t t);

// Indices (ascending) of the `count` points closest to `query` in squared
// Euclidean distance, ties to the lower index. `points` is row-major with
// `dim` columns.
std::vector<std::size_t> nearest_indices(std::span<const double> points,
                                         std::size_t dim,
                                         std::span<const double> query,
                                         std::size_t count);

// Trains a fresh learner on the chronologically ordered neighbours of z and
// returns its distribution for `advice`.
ActionDistribution nearest_act(const History& history,
                               const ExpertiseContext& z,
                               const NearestConfig& cfg,
                               const AdviceMatrix& advice);

class NearestPolicy final : public Policy {
 public:
  explicit NearestPolicy(NearestConfig config);
  Decision act(const AdviceMatrix& advice, const ExpertiseContext& z,
               Rng& rng) override;
  void update(const Experience& e) override;

  ActionDistribution distribution(const AdviceMatrix& advice,
                                  const ExpertiseContext& z) const;
  const History& history() const { return history_; }

 private:
  NearestConfig config_;
  History history_;
  // Expertise contexts of history_, row-major.
  std::vector<double> points_;
  std::size_t dim_ = 0;
};

// -- Reduction to a contextual bandit over experts ---------------------------

// Axis-aligned regression tree with mean-valued leaves, fit by greedy
// squared-error reduction.
class RegressionTree {
 public:
  struct Params {
    int max_depth = 6;
    std::size_t min_leaf = 5;
  };

  // `points` row-major n x dim, `targets` size n. `sample` lists the rows
  // to fit on and may repeat rows (bootstrap resamples).
  static RegressionTree fit(std::span<const double> points, std::size_t dim,
                            std::span<const double> targets,
                            std::vector<std::size_t> sample, Params params);
  static RegressionTree fit(std::span<const double> points, std::size_t dim,
                            std::span<const double> targets, Params params);

  double predict(std::span<const double> z) const;
  int depth() const;
  std::size_t leaf_count() const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };
  int build(std::span<const double> points, std::size_t dim,
            std::span<const double> targets, std::vector<std::size_t>& idx,
            std::size_t begin, std::size_t end, int depth, Params params);

  std::vector<Node> nodes_;
};

struct ReductionConfig {
  int n_experts = 1;
  int n_arms = 2;
  std::size_t warmup = 5;     // n0: samples per expert before trees are used
  int bootstrap = 1;          // B resamples per decision, predictions averaged
  RegressionTree::Params tree;
  void validate() const;
};

// Per-expert (z, reward) experience and the selection rule.
class ExpertReductionState {
 public:
  explicit ExpertReductionState(ReductionConfig config);

  int select_expert(const ExpertiseContext& z, Rng& rng) const;
  void record(int expert, const ExpertiseContext& z, double reward);

  std::size_t samples(int expert) const {
    return rewards_[static_cast<std::size_t>(expert)].size();
  }
  const ReductionConfig& config() const { return config_; }

 private:
  ReductionConfig config_;
  std::vector<std::vector<double>> points_;
  std::vector<std::vector<double>> rewards_;
  std::size_t dim_ = 0;
};

int reduction_select_expert(const ExpertReductionState& state,
                            const ExpertiseContext& z, Rng& rng);

// Argmax of the expert's advice row (ties to the lowest arm); the recorded
// propensity is 1 since this baseline does not reweight its log.
Decision reduction_act_on_expert(const AdviceMatrix& advice, int expert);

class ReductionPolicy final : public Policy {
 public:
  explicit ReductionPolicy(ReductionConfig config) : state_(std::move(config)) {}
  Decision act(const AdviceMatrix& advice, const ExpertiseContext& z,
               Rng& rng) override;
  void update(const Experience& e) override;
  const ExpertReductionState& state() const { return state_; }
  int last_expert() const { return last_expert_; }

 private:
  ExpertReductionState state_;
  int last_expert_ = -1;
};

// -- Oracle -------------------------------------------------------------------

struct OracleState {
  std::array<int, 2> rel_pair{0, 1};
  int m = 1;
  std::vector<Learner> learners;  // one per region, m*m

  OracleState(const ExpertiseSetup& setup, const LearnerConfig& config);
  int region(const ExpertiseContext& z) const;
};

Learner& oracle_route(OracleState& state, const ExpertiseContext& z);
const Learner& oracle_route(const OracleState& state,
                            const ExpertiseContext& z);

class OraclePolicy final : public Policy {
 public:
  OraclePolicy(const ExpertiseSetup& setup, const LearnerConfig& config)
      : state_(setup, config) {}
  Decision act(const AdviceMatrix& advice, const ExpertiseContext& z,
               Rng& rng) override {
    return sample_arm(oracle_route(state_, z).act(advice), rng);
  }
  void update(const Experience& e) override {
    oracle_route(state_, e.expertise_ctx).update(e);
  }
  const OracleState& state() const { return state_; }

 private:
  OracleState state_;
};

}  // namespace exptree
