#include "exptree/env.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace exptree {

void Dataset::validate() const {
  if (n_rows < 1) throw std::invalid_argument("dataset: no rows");
  if (n_features < 1) throw std::invalid_argument("dataset: no features");
  if (rows.size() != n_rows * n_features || labels.size() != n_rows) {
    throw std::invalid_argument("dataset: inconsistent sizes");
  }
  if (n_classes < 2) throw std::invalid_argument("dataset: need K >= 2");
  for (double v : rows) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("dataset: value outside [0,1]");
    }
  }
  for (int l : labels) {
    if (l < 0 || l >= n_classes) {
      throw std::invalid_argument("dataset: label out of range");
    }
  }
}

Dataset gen_synthetic_dataset(std::size_t n,
                              const std::vector<LinearScorer>& scorers,
                              std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthetic: need n >= 1");
  if (scorers.size() < 2) throw std::invalid_argument("synthetic: need K >= 2");
  const std::size_t d = scorers.front().weights.size();
  if (d < 1) throw std::invalid_argument("synthetic: need d >= 1");
  for (const auto& s : scorers) {
    if (s.weights.size() != d) {
      throw std::invalid_argument("synthetic: scorer dimensions differ");
    }
  }
  Dataset ds;
  ds.name = "synthetic";
  ds.n_rows = n;
  ds.n_features = d;
  ds.n_classes = static_cast<int>(scorers.size());
  ds.rows.resize(n * d);
  ds.labels.resize(n);
  for (std::size_t j = 0; j < d; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j));
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = ds.rows.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = unit(rng);
    int best = 0;
    double best_score = 0.0;
    for (std::size_t k = 0; k < scorers.size(); ++k) {
      double s = scorers[k].bias;
      for (std::size_t j = 0; j < d; ++j) s += scorers[k].weights[j] * row[j];
      if (k == 0 || s > best_score) {
        best = static_cast<int>(k);
        best_score = s;
      }
    }
    ds.labels[i] = best;
  }
  return ds;
}

Dataset gen_synthetic_dataset(std::size_t n, std::size_t d, int k,
                              std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("synthetic: need d >= 1");
  if (k < 2) throw std::invalid_argument("synthetic: need K >= 2");
  Rng rng(derive_seed(seed, 0x5C0E));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<LinearScorer> scorers(static_cast<std::size_t>(k));
  for (auto& s : scorers) {
    s.weights.resize(d);
    for (double& w : s.weights) w = normal(rng);
    s.bias = -0.5 * std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
  }
  return gen_synthetic_dataset(n, scorers, seed);
}

void ExpertiseSetup::validate() const {
  if (std::find(kAllowedGridSides.begin(), kAllowedGridSides.end(), m) ==
      kAllowedGridSides.end()) {
    throw std::invalid_argument("setup: grid side must be 1, 2, 4 or 8");
  }
  if (g_indices.size() < 2) {
    throw std::invalid_argument("setup: expertise context needs g >= 2");
  }
  for (int p : rel_pair) {
    if (p < 0 || p >= g()) throw std::invalid_argument("setup: bad rel_pair");
  }
  if (rel_pair[0] == rel_pair[1]) {
    throw std::invalid_argument("setup: rel_pair must be distinct");
  }
  if (heatmaps.empty()) throw std::invalid_argument("setup: need N >= 1");
  for (const auto& h : heatmaps) {
    if (h.size() != static_cast<std::size_t>(m * m)) {
      throw std::invalid_argument("setup: heatmap size != m*m");
    }
    for (auto v : h) {
      if (v > 1) throw std::invalid_argument("setup: heatmap value not 0/1");
    }
  }
  if (!(advice_noise >= 0.0)) {
    throw std::invalid_argument("setup: advice noise must be >= 0");
  }
}

ExpertiseSetup gen_expertise_setup(std::size_t d, int g, int m, int n_experts,
                                   std::uint64_t seed, double sigma) {
  if (g < 2) throw std::invalid_argument("setup: expertise context needs g >= 2");
  if (static_cast<std::size_t>(g) > d) {
    throw std::invalid_argument("setup: g exceeds the feature count");
  }
  if (std::find(kAllowedGridSides.begin(), kAllowedGridSides.end(), m) ==
      kAllowedGridSides.end()) {
    throw std::invalid_argument("setup: grid side must be 1, 2, 4 or 8");
  }
  if (n_experts < 1) throw std::invalid_argument("setup: need N >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("setup: sigma must be >= 0");
  Rng rng(seed);
  ExpertiseSetup s;
  s.m = m;
  s.advice_noise = sigma;

  std::vector<int> all(d);
  std::iota(all.begin(), all.end(), 0);
  // Partial Fisher-Yates: the first g slots are a uniform sample.
  for (int i = 0; i < g; ++i) {
    std::uniform_int_distribution<std::size_t> pick(
        static_cast<std::size_t>(i), d - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
  }
  s.g_indices.assign(all.begin(), all.begin() + g);

  std::uniform_int_distribution<int> pos(0, g - 1);
  s.rel_pair[0] = pos(rng);
  do {
    s.rel_pair[1] = pos(rng);
  } while (s.rel_pair[1] == s.rel_pair[0]);

  std::bernoulli_distribution coin(0.5);
  s.heatmaps.assign(static_cast<std::size_t>(n_experts),
                    std::vector<std::uint8_t>(static_cast<std::size_t>(m * m)));
  for (auto& h : s.heatmaps) {
    for (auto& cell : h) cell = coin(rng) ? 1 : 0;
  }
  return s;
}

int region_id(double a, double b, int m) {
  const auto cell = [m](double v) {
    const int c = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * m));
    return std::min(c, m - 1);
  };
  return cell(a) * m + cell(b);
}

int region_of(const ExpertiseSetup& setup, const ExpertiseContext& z) {
  return region_id(z[static_cast<std::size_t>(setup.rel_pair[0])],
                   z[static_cast<std::size_t>(setup.rel_pair[1])], setup.m);
}

std::vector<double> gen_advice(const ExpertiseSetup& setup, int expert,
                               const ExpertiseContext& z,
                               std::span<const double> true_rewards, Rng& rng) {
  const double e =
      setup.heatmaps[static_cast<std::size_t>(expert)]
                    [static_cast<std::size_t>(region_of(setup, z))];
  std::normal_distribution<double> noise(0.0, setup.advice_noise);
  std::vector<double> out(true_rewards.size());
  for (std::size_t k = 0; k < true_rewards.size(); ++k) {
    const double f = true_rewards[k];
    double v = e * f + (1.0 - e) * (1.0 - f);
    if (setup.advice_noise > 0.0) v += noise(rng);
    out[k] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

RoundOutcome bandit_round(const Dataset& dataset, const ExpertiseSetup& setup,
                          Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, dataset.n_rows - 1);
  RoundOutcome out;
  out.row_index = pick(rng);
  out.label = dataset.labels[out.row_index];
  const auto row = dataset.row(out.row_index);
  out.full_ctx.values.assign(row.begin(), row.end());
  std::vector<double> z;
  z.reserve(setup.g_indices.size());
  for (int idx : setup.g_indices) z.push_back(row[static_cast<std::size_t>(idx)]);
  out.expertise_ctx = ExpertiseContext(std::move(z));
  out.true_rewards.assign(static_cast<std::size_t>(dataset.n_classes), 0.0);
  out.true_rewards[static_cast<std::size_t>(out.label)] = 1.0;

  const int n = setup.n_experts();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * dataset.n_classes));
  for (int expert = 0; expert < n; ++expert) {
    const auto advice_row = gen_advice(setup, expert, out.expertise_ctx,
                                       out.true_rewards, rng);
    values.insert(values.end(), advice_row.begin(), advice_row.end());
  }
  out.advice = AdviceMatrix(n, dataset.n_classes, std::move(values));
  out.region = region_of(setup, out.expertise_ctx);
  return out;
}

BanditEnvironment::BanditEnvironment(std::shared_ptr<const Dataset> dataset,
                                     ExpertiseSetup setup, std::uint64_t seed,
                                     double reward_flip)
    : dataset_(std::move(dataset)),
      setup_(std::move(setup)),
      rng_(seed),
      reward_flip_(reward_flip) {
  if (!dataset_) throw std::invalid_argument("environment: null dataset");
  dataset_->validate();
  setup_.validate();
  for (int idx : setup_.g_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= dataset_->n_features) {
      throw std::invalid_argument("environment: g index out of range");
    }
  }
  if (!(reward_flip_ >= 0.0 && reward_flip_ <= 1.0)) {
    throw std::invalid_argument("environment: reward_flip outside [0,1]");
  }
}

double BanditEnvironment::reward(const RoundOutcome& outcome, int arm) {
  double r = outcome.true_rewards.at(static_cast<std::size_t>(arm));
  if (reward_flip_ > 0.0) {
    std::bernoulli_distribution flip(reward_flip_);
    if (flip(rng_)) r = 1.0 - r;
  }
  return r;
}

}  // namespace exptree
