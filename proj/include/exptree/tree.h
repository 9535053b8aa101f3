#pragma once

// Expertise tree: a binary decision tree over the expertise context whose
// nodes each host a leaf learner. Every node keeps a bank of candidate
// splits (kappa fixed thresholds per feature), each simulating two child
// learners on its side of the data. A candidate becomes the node's split
// when the children's progressive importance-weighted reward beats the
// node's own learner on the same tuples.
//
// Two modes:
//  * kFull: every node on the root-to-leaf path is updated each round and
//    may gain, change or drop its split. Children created for a split get
//    their candidate banks replayed from the node's stored sub-history.
//  * kIncremental: only the leaf that acted is updated; once a split is
//    made it is frozen, and new children start with empty banks.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exptree/core.h"
#include "exptree/learners.h"

namespace exptree {

enum class TreeMode { kFull, kIncremental };

struct CandidateSplit {
  int feature = 0;
  double threshold = 0.5;
  Learner left;
  Learner right;
  double left_sum = 0.0;
  double right_sum = 0.0;
  std::int64_t left_count = 0;
  std::int64_t right_count = 0;

  bool goes_left(const ExpertiseContext& z) const {
    return z[static_cast<std::size_t>(feature)] < threshold;
  }
};

struct SplitRule {
  int feature = 0;
  double threshold = 0.5;
  // Index into the owning node's candidate bank.
  std::size_t candidate = 0;

  bool goes_left(const ExpertiseContext& z) const {
    return z[static_cast<std::size_t>(feature)] < threshold;
  }
};

struct TreeNode {
  explicit TreeNode(Learner l) : learner(std::move(l)) {}
  TreeNode(const TreeNode& other);
  TreeNode& operator=(const TreeNode& other);
  TreeNode(TreeNode&&) noexcept = default;
  TreeNode& operator=(TreeNode&&) noexcept = default;

  Learner learner;
  // Progressive IPS sum and tuple count of `learner` over its lifetime.
  double own_sum = 0.0;
  std::int64_t own_count = 0;
  // own_sum/own_count at the moment the candidate bank was created; split
  // decisions compare candidates with own_sum - bank_base_sum so both sides
  // cover the same tuples.
  double bank_base_sum = 0.0;
  std::int64_t bank_base_count = 0;
  std::vector<CandidateSplit> candidates;
  std::optional<SplitRule> active_split;
  // children[0] is z[f] < tau, children[1] is z[f] >= tau.
  std::array<std::unique_ptr<TreeNode>, 2> children;
  // Indices into the tree's history of tuples used to update this node.
  std::vector<std::size_t> stored;
  bool frozen = false;

  bool is_leaf() const { return !active_split.has_value(); }
  TreeNode& child_for(const ExpertiseContext& z) {
    return *children[active_split->goes_left(z) ? 0 : 1];
  }
  const TreeNode& child_for(const ExpertiseContext& z) const {
    return *children[active_split->goes_left(z) ? 0 : 1];
  }
};

// {j / (kappa + 1) : j = 1..kappa}.
std::vector<double> fixed_thresholds(int kappa);

// Among candidates with both sides holding >= n_min tuples whose summed
// progressive reward strictly exceeds the node's own sum on the same
// tuples, the index of the one with the largest sum. Ties keep the first.
std::optional<std::size_t> evaluate_split(const TreeNode& node,
                                          std::int64_t n_min);

struct TreeConfig {
  TreeMode mode = TreeMode::kFull;
  int n_features = 1;  // g
  int kappa = 7;
  // Minimum tuples per prospective child; 2K when unset.
  std::optional<std::int64_t> n_min;
  LearnerConfig learner;

  void validate() const;
  std::int64_t effective_n_min() const {
    return n_min ? *n_min : 2 * static_cast<std::int64_t>(learner.n_arms);
  }
};

// Model-update counters for the most recent tree_update call.
struct UpdateStats {
  // Learner updates on the tuple itself along the updated path: one for the
  // node learner plus one per candidate (exactly one side each).
  std::int64_t path_updates = 0;
  // Learner updates spent replaying stored history into new child banks.
  std::int64_t replay_updates = 0;
  // Nodes whose learner was updated.
  int nodes_updated = 0;
  // Split activations, replacements and removals.
  int structure_changes = 0;
};

// Axis-aligned box [lo, hi) per feature covered by one leaf.
struct LeafBox {
  std::vector<double> lo;
  std::vector<double> hi;
  double volume() const;
  bool contains(const ExpertiseContext& z) const;
};

class ExpertiseTree {
 public:
  explicit ExpertiseTree(TreeConfig config);

  ExpertiseTree(const ExpertiseTree&) = default;
  ExpertiseTree& operator=(const ExpertiseTree&) = default;
  ExpertiseTree(ExpertiseTree&&) noexcept = default;
  ExpertiseTree& operator=(ExpertiseTree&&) noexcept = default;

  // Root-to-leaf path following active splits.
  std::vector<const TreeNode*> leaf_for(const ExpertiseContext& z) const;

  ActionDistribution act(const AdviceMatrix& advice,
                         const ExpertiseContext& z) const;

  // Incorporates one tuple. `e.propensity` must be the probability act()
  // assigned to `e.arm` for this round.
  void update(const Experience& e);

  const TreeNode& root() const { return root_; }
  const TreeConfig& config() const { return config_; }
  const History& history() const { return history_; }
  const UpdateStats& last_update() const { return last_; }
  std::int64_t total_path_updates() const { return total_path_updates_; }

  int depth() const;
  int leaf_count() const;
  std::vector<LeafBox> leaf_boxes() const;

  // One node per line, two spaces of indentation per level:
  // "split f<i> @ <tau>" or "leaf n=<count>".
  std::string to_text() const;

 private:
  std::vector<CandidateSplit> make_bank() const;
  // Adds `e` (index `idx` in history) to `node` and all its candidates.
  void absorb(TreeNode& node, const Experience& e, std::size_t idx,
              bool count_as_path);
  // Installs candidate `which` as the node's split.
  void activate(TreeNode& node, std::size_t which);
  void deactivate(TreeNode& node);
  // Walks down from `node`, absorbing the tuple and re-evaluating splits.
  void process_path(TreeNode* node, const Experience& e, std::size_t idx);
  TreeNode* mutable_leaf(const ExpertiseContext& z);

  TreeConfig config_;
  std::vector<double> thresholds_;
  TreeNode root_;
  History history_;
  UpdateStats last_;
  std::int64_t total_path_updates_ = 0;
};

}  // namespace exptree
