#include "exptree/learners.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "exptree/simd.h"

namespace exptree {
namespace {

// Log-weights further than this below the maximum are pinned so exp()
// stays strictly positive.
constexpr double kMinLogWeightGap = -700.0;

ActionDistribution mix_with_floor(std::vector<double> probs, double gamma) {
  const double k = static_cast<double>(probs.size());
  ActionDistribution d;
  d.floor = gamma / k;
  for (double& p : probs) p = (1.0 - gamma) * p + gamma / k;
  d.probs = std::move(probs);
  return d;
}

}  // namespace

std::string_view learner_kind_name(LearnerKind kind) {
  return kind == LearnerKind::kExp4 ? "exp4" : "linear";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "exp4") return LearnerKind::kExp4;
  if (name == "linear") return LearnerKind::kLinear;
  throw std::invalid_argument("unknown learner kind: " + std::string(name));
}

void LearnerConfig::validate() const {
  if (n_experts < 1) throw std::invalid_argument("learner: need N >= 1");
  if (n_arms < 2) throw std::invalid_argument("learner: need K >= 2");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("learner: gamma must be in (0,1]");
  }
  if (!(ridge > 0.0)) throw std::invalid_argument("learner: ridge must be > 0");
  if (!(ucb_width >= 0.0)) {
    throw std::invalid_argument("learner: ucb_width must be >= 0");
  }
  if (eta && !(*eta > 0.0)) {
    throw std::invalid_argument("learner: eta must be > 0");
  }
  if (horizon && *horizon < 1) {
    throw std::invalid_argument("learner: horizon must be >= 1");
  }
}

double LearnerConfig::effective_eta() const {
  if (eta) return *eta;
  if (horizon) {
    const double rate = std::sqrt(std::log(static_cast<double>(n_experts)) /
                                  (static_cast<double>(*horizon) * n_arms));
    // ln 1 = 0 would freeze a single-expert learner.
    if (rate > 0.0) return rate;
  }
  return 0.1;
}

// -- Exp4Learner ------------------------------------------------------------

Exp4Learner::Exp4Learner(const LearnerConfig& config)
    : n_experts_(config.n_experts),
      n_arms_(config.n_arms),
      eta_(config.effective_eta()),
      gamma_(config.gamma),
      log_weights_(static_cast<std::size_t>(config.n_experts), 0.0) {
  config.validate();
}

void Exp4Learner::check_dims(const AdviceMatrix& advice) const {
  if (advice.n_experts() != n_experts_ || advice.n_arms() != n_arms_) {
    throw std::invalid_argument("exp4: advice dimensions mismatch");
  }
}

std::vector<double> Exp4Learner::weights() const {
  std::vector<double> w(log_weights_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights_[i]);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

ActionDistribution Exp4Learner::act(const AdviceMatrix& advice) const {
  check_dims(advice);
  const std::vector<double> w = weights();
  std::vector<double> mix(static_cast<std::size_t>(n_arms_), 0.0);
  const double uniform = 1.0 / n_arms_;
  for (int n = 0; n < n_experts_; ++n) {
    const auto row = advice.row(n);
    double row_sum = 0.0;
    for (double v : row) row_sum += v;
    for (int k = 0; k < n_arms_; ++k) {
      const double share = row_sum > 0.0 ? row[k] / row_sum : uniform;
      mix[static_cast<std::size_t>(k)] += w[static_cast<std::size_t>(n)] * share;
    }
  }
  return mix_with_floor(std::move(mix), gamma_);
}

void Exp4Learner::update(const Experience& e) {
  check_experience(e, n_experts_, n_arms_);
  if (e.propensity < gamma_ / n_arms_ - kFloorSlack) {
    throw std::invalid_argument("exp4: propensity below exploration floor");
  }
  ++rounds_seen_;
  if (e.reward == 0.0) return;
  const double uniform = 1.0 / n_arms_;
  double top = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < n_experts_; ++n) {
    const auto row = e.advice.row(n);
    double row_sum = 0.0;
    for (double v : row) row_sum += v;
    const double share = row_sum > 0.0 ? row[e.arm] / row_sum : uniform;
    const double estimate = share * e.reward / e.propensity;
    log_weights_[static_cast<std::size_t>(n)] += eta_ * estimate;
    top = std::max(top, log_weights_[static_cast<std::size_t>(n)]);
  }
  for (double& lw : log_weights_) lw = std::max(lw - top, kMinLogWeightGap);
}

// -- LinearAdviceLearner ----------------------------------------------------

LinearAdviceLearner::LinearAdviceLearner(const LearnerConfig& config)
    : dim_(config.n_experts + 1),
      n_arms_(config.n_arms),
      ridge_(config.ridge),
      ucb_width_(config.ucb_width),
      gamma_(config.gamma) {
  config.validate();
  const auto d = static_cast<std::size_t>(dim_);
  precision_.assign(d * d, 0.0);
  inverse_.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    precision_[i * d + i] = ridge_;
    inverse_[i * d + i] = 1.0 / ridge_;
  }
  moment_.assign(d, 0.0);
  theta_.assign(d, 0.0);
}

void LinearAdviceLearner::check_dims(const AdviceMatrix& advice) const {
  if (advice.n_experts() != dim_ - 1 || advice.n_arms() != n_arms_) {
    throw std::invalid_argument("linear: advice dimensions mismatch");
  }
}

void LinearAdviceLearner::features(const AdviceMatrix& advice, int arm,
                                   std::vector<double>& phi) const {
  phi[0] = 1.0;
  for (int n = 0; n < dim_ - 1; ++n) {
    phi[static_cast<std::size_t>(n) + 1] = advice(n, arm);
  }
}

int LinearAdviceLearner::greedy_arm(const AdviceMatrix& advice) const {
  check_dims(advice);
  const auto d = static_cast<std::size_t>(dim_);
  const auto& k = simd::kernels();
  std::vector<double> phi(d);
  std::vector<double> tmp(d);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int arm = 0; arm < n_arms_; ++arm) {
    features(advice, arm, phi);
    k.matvec(inverse_.data(), phi.data(), tmp.data(), d);
    const double quad = k.dot(phi.data(), tmp.data(), d);
    if (!(quad > 0.0)) {
      throw std::logic_error("linear: precision matrix is not positive definite");
    }
    const double score =
        k.dot(theta_.data(), phi.data(), d) + ucb_width_ * std::sqrt(quad);
    if (score > best_score) {
      best_score = score;
      best = arm;
    }
  }
  return best;
}

ActionDistribution LinearAdviceLearner::act(const AdviceMatrix& advice) const {
  std::vector<double> probs(static_cast<std::size_t>(n_arms_), 0.0);
  probs[static_cast<std::size_t>(greedy_arm(advice))] = 1.0;
  return mix_with_floor(std::move(probs), gamma_);
}

void LinearAdviceLearner::update(const Experience& e) {
  check_experience(e, dim_ - 1, n_arms_);
  const auto d = static_cast<std::size_t>(dim_);
  const auto& k = simd::kernels();
  std::vector<double> phi(d);
  std::vector<double> u(d);
  features(e.advice, e.arm, phi);
  k.matvec(inverse_.data(), phi.data(), u.data(), d);
  const double denom = 1.0 + k.dot(phi.data(), u.data(), d);
  k.rank1_update(inverse_.data(), u.data(), -1.0 / denom, d);
  k.rank1_update(precision_.data(), phi.data(), 1.0, d);
  for (std::size_t i = 0; i < d; ++i) moment_[i] += e.reward * phi[i];
  k.matvec(inverse_.data(), moment_.data(), theta_.data(), d);
}

Learner fresh(const LearnerConfig& config) {
  config.validate();
  if (config.kind == LearnerKind::kExp4) return Learner(Exp4Learner(config));
  return Learner(LinearAdviceLearner(config));
}

Learner replay(const LearnerConfig& config, const History& history) {
  Learner learner = fresh(config);
  for (const Experience& e : history) learner.update(e);
  return learner;
}

}  // namespace exptree
