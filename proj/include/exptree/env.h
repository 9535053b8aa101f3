#pragma once

// Classification-derived bandits with localized expertise. A dataset row is
// the full context, the label arm pays 1 and every other arm pays 0. Each
// expert has an m x m expertise heatmap over two designated features of the
// expertise context; in cells valued 1 the expert's advice is honest, in
// cells valued 0 it is inverted.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "exptree/core.h"

namespace exptree {

struct Dataset {
  std::string name;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;  // d
  int n_classes = 0;           // K
  // Row-major n_rows x n_features, values in [0,1].
  std::vector<double> rows;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::span<const double> row(std::size_t i) const {
    return {rows.data() + i * n_features, n_features};
  }
  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

// One-hot encodes categorical columns, min-max scales numeric columns
// (constant columns become 0) and factorizes the label column. Rejects
// unreadable files, ragged or empty fields, and single-class labels.
Dataset load_csv_dataset(const std::filesystem::path& path,
                         const std::string& label_column);

// score(x) = weights . x + bias
struct LinearScorer {
  std::vector<double> weights;
  double bias = 0.0;
};

// Rows uniform on [0,1]^d labelled by argmax_k scorers[k](row), ties to the
// lowest class.
Dataset gen_synthetic_dataset(std::size_t n,
                              const std::vector<LinearScorer>& scorers,
                              std::uint64_t seed);
// As above with K scorers drawn from `seed`: Gaussian weights centred on
// the middle of the cube.
Dataset gen_synthetic_dataset(std::size_t n, std::size_t d, int k,
                              std::uint64_t seed);

inline constexpr std::array<int, 4> kAllowedGridSides{1, 2, 4, 8};

struct ExpertiseSetup {
  // Dataset columns forming the expertise context, in context order.
  std::vector<int> g_indices;
  // Positions within the expertise context that drive expertise.
  std::array<int, 2> rel_pair{0, 1};
  int m = 1;
  // heatmaps[n][row * m + col] in {0,1}.
  std::vector<std::vector<std::uint8_t>> heatmaps;
  double advice_noise = 0.1;

  int n_experts() const { return static_cast<int>(heatmaps.size()); }
  int g() const { return static_cast<int>(g_indices.size()); }
  int regions() const { return m * m; }
  void validate() const;
};

ExpertiseSetup gen_expertise_setup(std::size_t d, int g, int m, int n_experts,
                                   std::uint64_t seed, double sigma);

// row = min(floor(a m), m-1), col = min(floor(b m), m-1); row * m + col.
int region_id(double a, double b, int m);
int region_of(const ExpertiseSetup& setup, const ExpertiseContext& z);

// Advice row of expert `expert` for one round; noise draws come from `rng`.
std::vector<double> gen_advice(const ExpertiseSetup& setup, int expert,
                               const ExpertiseContext& z,
                               std::span<const double> true_rewards, Rng& rng);

struct RoundOutcome {
  std::size_t row_index = 0;
  int label = 0;
  FullContext full_ctx;
  ExpertiseContext expertise_ctx;
  std::vector<double> true_rewards;
  AdviceMatrix advice;
  int region = 0;
};

// Samples a row with replacement and assembles the round.
RoundOutcome bandit_round(const Dataset& dataset, const ExpertiseSetup& setup,
                          Rng& rng);

// A dataset, an expertise setup and one RNG stream.
class BanditEnvironment {
 public:
  BanditEnvironment(std::shared_ptr<const Dataset> dataset,
                    ExpertiseSetup setup, std::uint64_t seed,
                    double reward_flip = 0.0);

  RoundOutcome next_round() { return bandit_round(*dataset_, setup_, rng_); }
  // Observed reward for pulling `arm`; flipped with probability
  // reward_flip (default 0, noiseless).
  double reward(const RoundOutcome& outcome, int arm);

  const Dataset& dataset() const { return *dataset_; }
  const ExpertiseSetup& setup() const { return setup_; }

 private:
  std::shared_ptr<const Dataset> dataset_;
  ExpertiseSetup setup_;
  Rng rng_;
  double reward_flip_;
};

}  // namespace exptree
