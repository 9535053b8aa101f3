#pragma once

// Experiment runner: builds the environment and one algorithm per seed,
// runs the observe / act / reward / update loop and records metrics.
// Results are written as results.csv for downstream plotting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exptree/core.h"
#include "exptree/env.h"
#include "exptree/learners.h"

namespace exptree {

enum class Algorithm {
  kFlat,
  kOracle,
  kTreeFull,
  kTreeIncremental,
  kNearest,
  kReduction,
};

// "flat", "oracle", "tree", "tree-incremental", "nearest", "reduction".
Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm algo);

struct DatasetSource {
  // When set, the dataset is read from this CSV; otherwise synthetic.
  std::optional<std::filesystem::path> csv_path;
  std::string label_column = "class";
  std::size_t n = 5000;
  std::size_t d = 16;
  int k = 5;
  std::uint64_t seed = 0;

  std::shared_ptr<const Dataset> load() const;
};

struct ExperimentConfig {
  Algorithm algo = Algorithm::kTreeFull;
  DatasetSource dataset;
  int n_experts = 8;
  int g = 8;
  int m = 4;
  std::int64_t horizon = 1000;  // T
  int kappa = 7;
  std::optional<std::int64_t> n_min;
  double sigma = 0.1;
  LearnerKind learner_kind = LearnerKind::kLinear;
  double gamma = 0.05;
  std::optional<double> eta;
  double ridge = 1.0;
  double ucb_width = 1.0;
  double percent = 10.0;  // Nearest p%
  std::size_t warmup = 5;
  int bootstrap = 1;
  int reduction_depth = 6;
  std::size_t reduction_min_leaf = 5;
  // Every expert gets expert 0's heatmap.
  bool identical_experts = false;
  double reward_flip = 0.0;
  std::vector<std::uint64_t> seeds{0};
  int threads = 1;
  // Also run the oracle under each seed and report the reward gap.
  bool oracle_gap = false;

  void validate() const;
  LearnerConfig learner_config(int n_arms) const;
  // Label for the CSV `algo` column, e.g. "nearest-10".
  std::string algo_label() const;
};

struct RunRecord {
  std::string algo;
  std::string dataset;
  int n_experts = 0;
  int n_arms = 0;
  int g = 0;
  int regions = 0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  double avg_reward = 0.0;
  // Running average reward at every T/10 rounds.
  std::vector<double> checkpoints;
  std::optional<double> oracle_gap;
  double step_time_us = 0.0;
  std::optional<int> depth;
  std::optional<int> leaves;
  // Final tree in ExpertiseTree::to_text() form (tree algorithms only).
  std::optional<std::string> tree_text;
  // Best average over experts of following that expert's argmax advice on
  // the same rounds.
  double best_expert_reward = 0.0;
};

// Everything except wall time.
bool same_outcome(const RunRecord& a, const RunRecord& b);

// One replication.
RunRecord run_single(const ExperimentConfig& config,
                     std::shared_ptr<const Dataset> dataset,
                     std::uint64_t seed);

// One record per seed, in seed order. Seeds run on up to config.threads
// threads with results identical to serial execution (apart from wall
// time).
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

// Policy for `config.algo` over the given setup.
std::unique_ptr<Policy> make_policy(const ExperimentConfig& config,
                                    const ExpertiseSetup& setup, int n_arms);

struct SummaryRow {
  std::string algo;
  int regions = 0;
  int g = 0;
  int n_experts = 0;
  std::size_t count = 0;
  double mean = 0.0;
  // 1.96 * sample std / sqrt(count); 0 and flagged for a single record.
  double half_width = 0.0;
  bool single_record = false;
};

// Groups by (algo, regions, g, N) in order of first appearance.
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records);

inline constexpr const char* kResultsHeader =
    "algo,dataset,N,K,g,regions,T,seed,avg_reward,oracle_gap,step_time_us,"
    "depth,leaves";

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_results_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records);
// Reads the columns written by write_results_csv.
std::vector<RunRecord> read_results_csv(std::istream& in);

// Mean act+update wall time per step in microseconds over config.seeds.
double measure_step_time(const ExperimentConfig& config);
// measure_step_time(config) / measure_step_time(config with algo = flat).
double relative_step_time(const ExperimentConfig& config);

}  // namespace exptree
