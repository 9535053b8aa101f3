#include "exptree/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "exptree/baselines.h"
#include "exptree/tree.h"

namespace exptree {
namespace {

constexpr std::uint64_t kSetupStream = 1;
constexpr std::uint64_t kEnvStream = 2;
constexpr std::uint64_t kPolicyStream = 3;

class TreePolicy final : public Policy {
 public:
  explicit TreePolicy(TreeConfig config) : tree_(std::move(config)) {}
  Decision act(const AdviceMatrix& advice, const ExpertiseContext& z,
               Rng& rng) override {
    return sample_arm(tree_.act(advice, z), rng);
  }
  void update(const Experience& e) override { tree_.update(e); }
  const ExpertiseTree& tree() const { return tree_; }

 private:
  ExpertiseTree tree_;
};

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "flat") return Algorithm::kFlat;
  if (name == "oracle") return Algorithm::kOracle;
  if (name == "tree") return Algorithm::kTreeFull;
  if (name == "tree-incremental") return Algorithm::kTreeIncremental;
  if (name == "nearest") return Algorithm::kNearest;
  if (name == "reduction") return Algorithm::kReduction;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::string_view algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kFlat:
      return "flat";
    case Algorithm::kOracle:
      return "oracle";
    case Algorithm::kTreeFull:
      return "tree";
    case Algorithm::kTreeIncremental:
      return "tree-incremental";
    case Algorithm::kNearest:
      return "nearest";
    case Algorithm::kReduction:
      return "reduction";
  }
  return "unknown";
}

std::shared_ptr<const Dataset> DatasetSource::load() const {
  if (csv_path) {
    return std::make_shared<const Dataset>(
        load_csv_dataset(*csv_path, label_column));
  }
  return std::make_shared<const Dataset>(gen_synthetic_dataset(n, d, k, seed));
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("config: T must be >= 1");
  if (n_experts < 1) throw std::invalid_argument("config: N must be >= 1");
  if (g < 2) throw std::invalid_argument("config: g must be >= 2");
  if (std::find(kAllowedGridSides.begin(), kAllowedGridSides.end(), m) ==
      kAllowedGridSides.end()) {
    throw std::invalid_argument("config: m must be 1, 2, 4 or 8");
  }
  if (kappa < 1) throw std::invalid_argument("config: kappa must be >= 1");
  if (n_min && *n_min < 1) throw std::invalid_argument("config: n_min >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("config: sigma >= 0");
  if (!(percent > 0.0 && percent <= 100.0)) {
    throw std::invalid_argument("config: p must be in (0,100]");
  }
  if (!(reward_flip >= 0.0 && reward_flip <= 1.0)) {
    throw std::invalid_argument("config: reward_flip must be in [0,1]");
  }
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  if (threads < 1) throw std::invalid_argument("config: threads >= 1");
  learner_config(2).validate();
}

LearnerConfig ExperimentConfig::learner_config(int n_arms) const {
  LearnerConfig lc;
  lc.kind = learner_kind;
  lc.n_experts = n_experts;
  lc.n_arms = n_arms;
  lc.gamma = gamma;
  lc.eta = eta;
  lc.horizon = horizon;
  lc.ridge = ridge;
  lc.ucb_width = ucb_width;
  return lc;
}

std::string ExperimentConfig::algo_label() const {
  std::string label(algorithm_name(algo));
  if (algo == Algorithm::kNearest) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%g", percent);
    label += buf;
  }
  return label;
}

std::unique_ptr<Policy> make_policy(const ExperimentConfig& config,
                                    const ExpertiseSetup& setup, int n_arms) {
  const LearnerConfig lc = config.learner_config(n_arms);
  switch (config.algo) {
    case Algorithm::kFlat:
      return std::make_unique<FlatPolicy>(lc);
    case Algorithm::kOracle:
      return std::make_unique<OraclePolicy>(setup, lc);
    case Algorithm::kTreeFull:
    case Algorithm::kTreeIncremental: {
      TreeConfig tc;
      tc.mode = config.algo == Algorithm::kTreeFull ? TreeMode::kFull
                                                    : TreeMode::kIncremental;
      tc.n_features = setup.g();
      tc.kappa = config.kappa;
      tc.n_min = config.n_min;
      tc.learner = lc;
      return std::make_unique<TreePolicy>(std::move(tc));
    }
    case Algorithm::kNearest:
      return std::make_unique<NearestPolicy>(NearestConfig{config.percent, lc});
    case Algorithm::kReduction: {
      ReductionConfig rc;
      rc.n_experts = config.n_experts;
      rc.n_arms = n_arms;
      rc.warmup = config.warmup;
      rc.bootstrap = config.bootstrap;
      rc.tree.max_depth = config.reduction_depth;
      rc.tree.min_leaf = config.reduction_min_leaf;
      return std::make_unique<ReductionPolicy>(std::move(rc));
    }
  }
  throw std::invalid_argument("unknown algorithm");
}

RunRecord run_single(const ExperimentConfig& config,
                     std::shared_ptr<const Dataset> dataset,
                     std::uint64_t seed) {
  config.validate();
  ExpertiseSetup setup =
      gen_expertise_setup(dataset->n_features, config.g, config.m,
                          config.n_experts, derive_seed(seed, kSetupStream),
                          config.sigma);
  if (config.identical_experts) {
    for (auto& h : setup.heatmaps) h = setup.heatmaps.front();
  }
  const int n_arms = dataset->n_classes;
  BanditEnvironment env(dataset, setup, derive_seed(seed, kEnvStream),
                        config.reward_flip);
  auto policy = make_policy(config, setup, n_arms);
  Rng rng(derive_seed(seed, kPolicyStream));

  RunRecord rec;
  rec.algo = config.algo_label();
  rec.dataset = dataset->name;
  rec.n_experts = config.n_experts;
  rec.n_arms = n_arms;
  rec.g = config.g;
  rec.regions = config.m * config.m;
  rec.horizon = config.horizon;
  rec.seed = seed;

  using Clock = std::chrono::steady_clock;
  Clock::duration busy{0};
  const std::int64_t interval = std::max<std::int64_t>(1, config.horizon / 10);
  std::vector<double> follow(static_cast<std::size_t>(config.n_experts), 0.0);
  double total = 0.0;
  for (std::int64_t t = 0; t < config.horizon; ++t) {
    RoundOutcome round = env.next_round();
    for (int n = 0; n < config.n_experts; ++n) {
      const auto row = round.advice.row(n);
      const auto best = std::max_element(row.begin(), row.end()) - row.begin();
      follow[static_cast<std::size_t>(n)] +=
          round.true_rewards[static_cast<std::size_t>(best)];
    }

    const auto t0 = Clock::now();
    const Decision d = policy->act(round.advice, round.expertise_ctx, rng);
    const auto t1 = Clock::now();
    const double r = env.reward(round, d.arm);
    Experience e{std::move(round.advice), d.arm,
                 r,                       d.propensity,
                 round.expertise_ctx,     t};
    const auto t2 = Clock::now();
    policy->update(e);
    const auto t3 = Clock::now();
    busy += (t1 - t0) + (t3 - t2);

    total += r;
    if ((t + 1) % interval == 0 || t + 1 == config.horizon) {
      rec.checkpoints.push_back(total / static_cast<double>(t + 1));
    }
  }
  const double steps = static_cast<double>(config.horizon);
  rec.avg_reward = total / steps;
  rec.step_time_us =
      std::max(std::chrono::duration<double, std::micro>(busy).count() / steps,
               1e-6);
  rec.best_expert_reward = *std::max_element(follow.begin(), follow.end()) / steps;
  if (const auto* tp = dynamic_cast<const TreePolicy*>(policy.get())) {
    rec.depth = tp->tree().depth();
    rec.leaves = tp->tree().leaf_count();
    rec.tree_text = tp->tree().to_text();
  }
  if (config.oracle_gap) {
    if (config.algo == Algorithm::kOracle) {
      rec.oracle_gap = 0.0;
    } else {
      ExperimentConfig oracle = config;
      oracle.algo = Algorithm::kOracle;
      oracle.oracle_gap = false;
      rec.oracle_gap = run_single(oracle, dataset, seed).avg_reward - rec.avg_reward;
    }
  }
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto dataset = config.dataset.load();
  const std::size_t n = config.seeds.size();
  std::vector<RunRecord> out(n);
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = run_single(config, dataset, config.seeds[i]);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = run_single(config, dataset, config.seeds[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

bool same_outcome(const RunRecord& a, const RunRecord& b) {
  return std::tie(a.algo, a.dataset, a.n_experts, a.n_arms, a.g, a.regions,
                  a.horizon, a.seed, a.avg_reward, a.checkpoints, a.oracle_gap,
                  a.depth, a.leaves, a.tree_text, a.best_expert_reward) ==
         std::tie(b.algo, b.dataset, b.n_experts, b.n_arms, b.g, b.regions,
                  b.horizon, b.seed, b.avg_reward, b.checkpoints, b.oracle_gap,
                  b.depth, b.leaves, b.tree_text, b.best_expert_reward);
}

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, int, int, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    Key key{r.algo, r.regions, r.g, r.n_experts};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.avg_reward);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& xs = groups.at(key);
    SummaryRow row;
    std::tie(row.algo, row.regions, row.g, row.n_experts) = key;
    row.count = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    row.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
      row.single_record = true;
    } else {
      double ss = 0.0;
      for (double x : xs) ss += (x - row.mean) * (x - row.mean);
      const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
      row.half_width = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
    }
    out.push_back(std::move(row));
  }
  return out;
}

double measure_step_time(const ExperimentConfig& config) {
  const auto records = run_experiment(config);
  double total = 0.0;
  for (const auto& r : records) total += r.step_time_us;
  return total / static_cast<double>(records.size());
}

double relative_step_time(const ExperimentConfig& config) {
  ExperimentConfig flat = config;
  flat.algo = Algorithm::kFlat;
  flat.oracle_gap = false;
  ExperimentConfig self = config;
  self.oracle_gap = false;
  if (config.algo == Algorithm::kFlat) return 1.0;
  return measure_step_time(self) / measure_step_time(flat);
}

}  // namespace exptree
