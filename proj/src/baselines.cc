#include "exptree/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "exptree/simd.h"

namespace exptree {

// -- Nearest p% ---------------------------------------------------------------

void NearestConfig::validate() const {
  if (!(percent > 0.0 && percent <= 100.0)) {
    throw std::invalid_argument("nearest: percent must be in (0,100]");
  }
  learner.validate();
}

std::size_t neighbor_count(double percent, std::size_t t) {
  const double raw = std::ceil(percent * static_cast<double>(t) / 100.0);
  return std::min(t, static_cast<std::size_t>(raw));
}

std::vector<std::size_t> nearest_indices(std::span<const double> points,
                                         std::size_t dim,
                                         std::span<const double> query,
                                         std::size_t count) {
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  count = std::min(count, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == n) return idx;
  std::vector<double> dist(n);
  simd::squared_distances(points, dim, query, dist);
  const auto closer = [&dist](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count),
                   idx.end(), closer);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

ActionDistribution train_and_act(const History& history,
                                 const std::vector<std::size_t>& chosen,
                                 const LearnerConfig& config,
                                 const AdviceMatrix& advice) {
  Learner learner = fresh(config);
  for (std::size_t i : chosen) learner.update(history[i]);
  return learner.act(advice);
}

}  // namespace

ActionDistribution nearest_act(const History& history,
                               const ExpertiseContext& z,
                               const NearestConfig& cfg,
                               const AdviceMatrix& advice) {
  cfg.validate();
  std::vector<double> points;
  points.reserve(history.size() * z.size());
  for (const Experience& e : history) {
    if (e.expertise_ctx.size() != z.size()) {
      throw std::invalid_argument("nearest: context length mismatch");
    }
    points.insert(points.end(), e.expertise_ctx.values.begin(),
                  e.expertise_ctx.values.end());
  }
  const auto chosen = nearest_indices(points, z.size(), z.values,
                                      neighbor_count(cfg.percent, history.size()));
  return train_and_act(history, chosen, cfg.learner, advice);
}

NearestPolicy::NearestPolicy(NearestConfig config) : config_(std::move(config)) {
  config_.validate();
}

ActionDistribution NearestPolicy::distribution(const AdviceMatrix& advice,
                                               const ExpertiseContext& z) const {
  if (!history_.empty() && z.size() != dim_) {
    throw std::invalid_argument("nearest: context length mismatch");
  }
  const auto chosen = nearest_indices(
      points_, z.size(), z.values, neighbor_count(config_.percent, history_.size()));
  return train_and_act(history_, chosen, config_.learner, advice);
}

Decision NearestPolicy::act(const AdviceMatrix& advice,
                            const ExpertiseContext& z, Rng& rng) {
  return sample_arm(distribution(advice, z), rng);
}

void NearestPolicy::update(const Experience& e) {
  if (history_.empty()) dim_ = e.expertise_ctx.size();
  if (e.expertise_ctx.size() != dim_) {
    throw std::invalid_argument("nearest: context length mismatch");
  }
  check_experience(e, config_.learner.n_experts, config_.learner.n_arms);
  history_.append(e);
  points_.insert(points_.end(), e.expertise_ctx.values.begin(),
                 e.expertise_ctx.values.end());
}

// -- RegressionTree -----------------------------------------------------------

RegressionTree RegressionTree::fit(std::span<const double> points,
                                   std::size_t dim,
                                   std::span<const double> targets,
                                   Params params) {
  std::vector<std::size_t> all(targets.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit(points, dim, targets, std::move(all), params);
}

RegressionTree RegressionTree::fit(std::span<const double> points,
                                   std::size_t dim,
                                   std::span<const double> targets,
                                   std::vector<std::size_t> sample,
                                   Params params) {
  if (dim == 0 || points.size() != targets.size() * dim) {
    throw std::invalid_argument("regression tree: shape mismatch");
  }
  if (sample.empty()) throw std::invalid_argument("regression tree: no data");
  if (params.min_leaf < 1) params.min_leaf = 1;
  RegressionTree tree;
  tree.build(points, dim, targets, sample, 0, sample.size(), 0, params);
  return tree;
}

int RegressionTree::build(std::span<const double> points, std::size_t dim,
                          std::span<const double> targets,
                          std::vector<std::size_t>& idx, std::size_t begin,
                          std::size_t end, int depth, Params params) {
  const std::size_t n = end - begin;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    sum += targets[idx[i]];
    sum_sq += targets[idx[i]] * targets[idx[i]];
  }
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, sum / static_cast<double>(n), -1, -1});
  if (depth >= params.max_depth || n < 2 * params.min_leaf) return self;

  const double total_sse = sum_sq - sum * sum / static_cast<double>(n);
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  const auto value = [&](std::size_t row, std::size_t f) {
    return points[row * dim + f];
  };
  for (std::size_t f = 0; f < dim; ++f) {
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(begin),
              idx.begin() + static_cast<std::ptrdiff_t>(end),
              [&](std::size_t a, std::size_t b) { return value(a, f) < value(b, f); });
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double y = targets[idx[begin + i - 1]];
      left_sum += y;
      left_sq += y * y;
      if (i < params.min_leaf || n - i < params.min_leaf) continue;
      const double lo = value(idx[begin + i - 1], f);
      const double hi = value(idx[begin + i], f);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i);
      const double nr = static_cast<double>(n - i);
      const double right_sum = sum - left_sum;
      const double sse = (left_sq - left_sum * left_sum / nl) +
                         (sum_sq - left_sq - right_sum * right_sum / nr);
      const double gain = total_sse - sse;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        double mid = 0.5 * (lo + hi);
        if (!(mid > lo)) mid = hi;
        best_threshold = mid;
      }
    }
  }
  if (best_feature < 0) return self;

  const auto f = static_cast<std::size_t>(best_feature);
  const auto mid_it = std::partition(
      idx.begin() + static_cast<std::ptrdiff_t>(begin),
      idx.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t row) { return value(row, f) < best_threshold; });
  const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
  const int left = build(points, dim, targets, idx, begin, mid, depth + 1, params);
  const int right = build(points, dim, targets, idx, mid, end, depth + 1, params);
  Node& node = nodes_[static_cast<std::size_t>(self)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = left;
  node.right = right;
  return self;
}

double RegressionTree::predict(std::span<const double> z) const {
  std::size_t at = 0;
  while (nodes_[at].feature >= 0) {
    const Node& n = nodes_[at];
    at = static_cast<std::size_t>(
        z[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes_[at].value;
}

int RegressionTree::depth() const {
  // Nodes are stored in pre-order; walk with an explicit stack.
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    best = std::max(best, d);
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const Node& n) { return n.feature < 0; }));
}

// -- Reduction ----------------------------------------------------------------

void ReductionConfig::validate() const {
  if (n_experts < 1) throw std::invalid_argument("reduction: need N >= 1");
  if (n_arms < 2) throw std::invalid_argument("reduction: need K >= 2");
  if (warmup < 1) throw std::invalid_argument("reduction: warmup >= 1");
  if (bootstrap < 1) throw std::invalid_argument("reduction: bootstrap >= 1");
  if (tree.max_depth < 0) throw std::invalid_argument("reduction: depth >= 0");
}

ExpertReductionState::ExpertReductionState(ReductionConfig config)
    : config_(std::move(config)) {
  config_.validate();
  points_.resize(static_cast<std::size_t>(config_.n_experts));
  rewards_.resize(static_cast<std::size_t>(config_.n_experts));
}

int ExpertReductionState::select_expert(const ExpertiseContext& z,
                                        Rng& rng) const {
  // Round-robin until every expert has `warmup` samples.
  int neediest = 0;
  for (int n = 1; n < config_.n_experts; ++n) {
    if (samples(n) < samples(neediest)) neediest = n;
  }
  if (samples(neediest) < config_.warmup) return neediest;

  if (z.size() != dim_) {
    throw std::invalid_argument("reduction: context length mismatch");
  }
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < config_.n_experts; ++n) {
    const auto& ys = rewards_[static_cast<std::size_t>(n)];
    std::uniform_int_distribution<std::size_t> pick(0, ys.size() - 1);
    double prediction = 0.0;
    for (int b = 0; b < config_.bootstrap; ++b) {
      std::vector<std::size_t> sample(ys.size());
      for (auto& s : sample) s = pick(rng);
      const auto tree = RegressionTree::fit(points_[static_cast<std::size_t>(n)],
                                            dim_, ys, std::move(sample),
                                            config_.tree);
      prediction += tree.predict(z.values);
    }
    prediction /= config_.bootstrap;
    if (prediction > best_value) {
      best_value = prediction;
      best = n;
    }
  }
  return best;
}

void ExpertReductionState::record(int expert, const ExpertiseContext& z,
                                  double reward) {
  if (expert < 0 || expert >= config_.n_experts) {
    throw std::invalid_argument("reduction: expert out of range");
  }
  if (dim_ == 0) dim_ = z.size();
  if (z.size() != dim_) {
    throw std::invalid_argument("reduction: context length mismatch");
  }
  auto& pts = points_[static_cast<std::size_t>(expert)];
  pts.insert(pts.end(), z.values.begin(), z.values.end());
  rewards_[static_cast<std::size_t>(expert)].push_back(reward);
}

int reduction_select_expert(const ExpertReductionState& state,
                            const ExpertiseContext& z, Rng& rng) {
  return state.select_expert(z, rng);
}

Decision reduction_act_on_expert(const AdviceMatrix& advice, int expert) {
  if (expert < 0 || expert >= advice.n_experts()) {
    throw std::invalid_argument("reduction: expert out of range");
  }
  const auto row = advice.row(expert);
  const auto it = std::max_element(row.begin(), row.end());
  return {static_cast<int>(it - row.begin()), 1.0};
}

Decision ReductionPolicy::act(const AdviceMatrix& advice,
                              const ExpertiseContext& z, Rng& rng) {
  last_expert_ = state_.select_expert(z, rng);
  return reduction_act_on_expert(advice, last_expert_);
}

void ReductionPolicy::update(const Experience& e) {
  if (last_expert_ < 0) {
    throw std::logic_error("reduction: update without a preceding act");
  }
  state_.record(last_expert_, e.expertise_ctx, e.reward);
  last_expert_ = -1;
}

// -- Oracle -------------------------------------------------------------------

OracleState::OracleState(const ExpertiseSetup& setup,
                         const LearnerConfig& config)
    : rel_pair(setup.rel_pair), m(setup.m) {
  learners.assign(static_cast<std::size_t>(m * m), fresh(config));
}

int OracleState::region(const ExpertiseContext& z) const {
  return region_id(z[static_cast<std::size_t>(rel_pair[0])],
                   z[static_cast<std::size_t>(rel_pair[1])], m);
}

Learner& oracle_route(OracleState& state, const ExpertiseContext& z) {
  return state.learners[static_cast<std::size_t>(state.region(z))];
}

const Learner& oracle_route(const OracleState& state,
                            const ExpertiseContext& z) {
  return state.learners[static_cast<std::size_t>(state.region(z))];
}

}  // namespace exptree
