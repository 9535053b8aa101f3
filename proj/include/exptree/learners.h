#pragma once

// Leaf learners for bandits with expert advice. Both share the
// act(advice) / update(experience) interface and are plain values: copying
// a learner snapshots its state.

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "exptree/core.h"

namespace exptree {

enum class LearnerKind { kExp4, kLinear };

std::string_view learner_kind_name(LearnerKind kind);
// Accepts "exp4" and "linear".
LearnerKind parse_learner_kind(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kLinear;
  int n_experts = 1;
  int n_arms = 2;
  // Exploration mass spread uniformly over the arms; floor is gamma / K.
  double gamma = 0.05;
  // EXP4 learning rate. When unset: sqrt(ln N / (T K)) if `horizon` is set,
  // 0.1 otherwise.
  std::optional<double> eta;
  std::optional<std::int64_t> horizon;
  // Linear learner ridge and confidence width.
  double ridge = 1.0;
  double ucb_width = 1.0;

  // Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;
  double effective_eta() const;
  double floor() const { return gamma / n_arms; }
};

// Exponential weights over experts with advice rows normalized to
// distributions.
class Exp4Learner {
 public:
  explicit Exp4Learner(const LearnerConfig& config);

  ActionDistribution act(const AdviceMatrix& advice) const;
  void update(const Experience& e);

  // Normalized weights (a point in the open simplex).
  std::vector<double> weights() const;
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  std::int64_t rounds_seen() const { return rounds_seen_; }
  int n_experts() const { return n_experts_; }
  int n_arms() const { return n_arms_; }

 private:
  void check_dims(const AdviceMatrix& advice) const;

  int n_experts_;
  int n_arms_;
  double eta_;
  double gamma_;
  // Log-domain weights, shifted so the maximum is 0.
  std::vector<double> log_weights_;
  std::int64_t rounds_seen_ = 0;
};

// Ridge/UCB contextual bandit whose per-arm context is the advice column
// (1, xi^1_k, ..., xi^N_k). Keeps the precision matrix, its inverse
// (Sherman-Morrison updates) and the reward-weighted moment.
class LinearAdviceLearner {
 public:
  explicit LinearAdviceLearner(const LearnerConfig& config);

  ActionDistribution act(const AdviceMatrix& advice) const;
  void update(const Experience& e);

  // Arm with the largest optimistic score; ties go to the lowest index.
  int greedy_arm(const AdviceMatrix& advice) const;

  int dim() const { return dim_; }
  // Row-major dim x dim.
  const std::vector<double>& precision() const { return precision_; }
  const std::vector<double>& precision_inverse() const { return inverse_; }
  const std::vector<double>& moment() const { return moment_; }
  const std::vector<double>& theta() const { return theta_; }
  double ridge() const { return ridge_; }
  double ucb_width() const { return ucb_width_; }
  double gamma() const { return gamma_; }
  int n_experts() const { return dim_ - 1; }
  int n_arms() const { return n_arms_; }

 private:
  void check_dims(const AdviceMatrix& advice) const;
  void features(const AdviceMatrix& advice, int arm,
                std::vector<double>& phi) const;

  int dim_;
  int n_arms_;
  double ridge_;
  double ucb_width_;
  double gamma_;
  std::vector<double> precision_;
  std::vector<double> inverse_;
  std::vector<double> moment_;
  std::vector<double> theta_;
};

// Type-erased leaf learner with value semantics.
class Learner {
 public:
  explicit Learner(Exp4Learner l) : impl_(std::move(l)) {}
  explicit Learner(LinearAdviceLearner l) : impl_(std::move(l)) {}

  ActionDistribution act(const AdviceMatrix& advice) const {
    return std::visit([&](const auto& l) { return l.act(advice); }, impl_);
  }
  void update(const Experience& e) {
    std::visit([&](auto& l) { l.update(e); }, impl_);
  }
  LearnerKind kind() const {
    return std::holds_alternative<Exp4Learner>(impl_) ? LearnerKind::kExp4
                                                      : LearnerKind::kLinear;
  }
  const Exp4Learner* as_exp4() const { return std::get_if<Exp4Learner>(&impl_); }
  const LinearAdviceLearner* as_linear() const {
    return std::get_if<LinearAdviceLearner>(&impl_);
  }

 private:
  std::variant<Exp4Learner, LinearAdviceLearner> impl_;
};

// Untrained learner for `config`; validates hyperparameters.
Learner fresh(const LearnerConfig& config);

// Updates a fresh learner on `history` in order.
Learner replay(const LearnerConfig& config, const History& history);

}  // namespace exptree
