#include "exptree/tree.h"

#include <charconv>
#include <stdexcept>
#include <utility>

namespace exptree {

TreeNode::TreeNode(const TreeNode& other)
    : learner(other.learner),
      own_sum(other.own_sum),
      own_count(other.own_count),
      bank_base_sum(other.bank_base_sum),
      bank_base_count(other.bank_base_count),
      candidates(other.candidates),
      active_split(other.active_split),
      stored(other.stored),
      frozen(other.frozen) {
  for (std::size_t i = 0; i < 2; ++i) {
    if (other.children[i]) {
      children[i] = std::make_unique<TreeNode>(*other.children[i]);
    }
  }
}

TreeNode& TreeNode::operator=(const TreeNode& other) {
  if (this != &other) {
    TreeNode copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::vector<double> fixed_thresholds(int kappa) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(kappa));
  for (int j = 1; j <= kappa; ++j) {
    out.push_back(static_cast<double>(j) / static_cast<double>(kappa + 1));
  }
  return out;
}

std::optional<std::size_t> evaluate_split(const TreeNode& node,
                                          std::int64_t n_min) {
  const double own = node.own_sum - node.bank_base_sum;
  std::optional<std::size_t> best;
  double best_sum = 0.0;
  for (std::size_t i = 0; i < node.candidates.size(); ++i) {
    const CandidateSplit& c = node.candidates[i];
    if (c.left_count < n_min || c.right_count < n_min) continue;
    if (!split_beneficial(c.left_sum, c.right_sum, own)) continue;
    const double total = c.left_sum + c.right_sum;
    if (!best || total > best_sum) {
      best = i;
      best_sum = total;
    }
  }
  return best;
}

void TreeConfig::validate() const {
  if (n_features < 1) throw std::invalid_argument("tree: need g >= 1");
  if (kappa < 1) throw std::invalid_argument("tree: kappa must be >= 1");
  if (n_min && *n_min < 1) throw std::invalid_argument("tree: n_min >= 1");
  learner.validate();
}

double LeafBox::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool LeafBox::contains(const ExpertiseContext& z) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    // The upper face of the unit cube belongs to the last cell.
    const bool below_hi = z[i] < hi[i] || (hi[i] == 1.0 && z[i] == 1.0);
    if (!(z[i] >= lo[i] && below_hi)) return false;
  }
  return true;
}

ExpertiseTree::ExpertiseTree(TreeConfig config)
    : config_((config.validate(), std::move(config))),
      thresholds_(fixed_thresholds(config_.kappa)),
      root_(fresh(config_.learner)) {
  root_.candidates = make_bank();
}

std::vector<CandidateSplit> ExpertiseTree::make_bank() const {
  std::vector<CandidateSplit> bank;
  bank.reserve(static_cast<std::size_t>(config_.n_features) *
               thresholds_.size());
  for (int f = 0; f < config_.n_features; ++f) {
    for (double tau : thresholds_) {
      bank.push_back(CandidateSplit{f, tau, fresh(config_.learner),
                                    fresh(config_.learner)});
    }
  }
  return bank;
}

std::vector<const TreeNode*> ExpertiseTree::leaf_for(
    const ExpertiseContext& z) const {
  if (z.size() != static_cast<std::size_t>(config_.n_features)) {
    throw std::invalid_argument("tree: expertise context has wrong length");
  }
  std::vector<const TreeNode*> path{&root_};
  while (!path.back()->is_leaf()) path.push_back(&path.back()->child_for(z));
  return path;
}

TreeNode* ExpertiseTree::mutable_leaf(const ExpertiseContext& z) {
  TreeNode* node = &root_;
  while (!node->is_leaf()) node = &node->child_for(z);
  return node;
}

ActionDistribution ExpertiseTree::act(const AdviceMatrix& advice,
                                      const ExpertiseContext& z) const {
  return leaf_for(z).back()->learner.act(advice);
}

void ExpertiseTree::absorb(TreeNode& node, const Experience& e,
                           std::size_t idx, bool count_as_path) {
  node.own_sum += ips_term(node.learner, e);
  node.learner.update(e);
  ++node.own_count;
  node.stored.push_back(idx);
  for (CandidateSplit& c : node.candidates) {
    if (c.goes_left(e.expertise_ctx)) {
      c.left_sum += ips_term(c.left, e);
      c.left.update(e);
      ++c.left_count;
    } else {
      c.right_sum += ips_term(c.right, e);
      c.right.update(e);
      ++c.right_count;
    }
  }
  const auto n = static_cast<std::int64_t>(node.candidates.size()) + 1;
  if (count_as_path) {
    last_.path_updates += n;
    ++last_.nodes_updated;
  } else {
    last_.replay_updates += n - 1;
  }
}

void ExpertiseTree::activate(TreeNode& node, std::size_t which) {
  const CandidateSplit& c = node.candidates[which];
  std::array<std::unique_ptr<TreeNode>, 2> kids{
      std::make_unique<TreeNode>(c.left), std::make_unique<TreeNode>(c.right)};
  kids[0]->own_sum = c.left_sum;
  kids[0]->own_count = c.left_count;
  kids[1]->own_sum = c.right_sum;
  kids[1]->own_count = c.right_count;
  // The candidate learners saw exactly the tuples since the bank was made.
  const auto first = node.stored.size() -
                     static_cast<std::size_t>(node.own_count -
                                              node.bank_base_count);
  for (std::size_t s = first; s < node.stored.size(); ++s) {
    const std::size_t idx = node.stored[s];
    kids[c.goes_left(history_[idx].expertise_ctx) ? 0 : 1]->stored.push_back(
        idx);
  }

  for (auto& kid : kids) {
    kid->candidates = make_bank();
    if (config_.mode == TreeMode::kFull) {
      // Rebuild the child's bank from its sub-history; the child learner
      // itself is inherited and already covers those tuples.
      for (std::size_t idx : kid->stored) {
        const Experience& e = history_[idx];
        for (CandidateSplit& cand : kid->candidates) {
          if (cand.goes_left(e.expertise_ctx)) {
            cand.left_sum += ips_term(cand.left, e);
            cand.left.update(e);
            ++cand.left_count;
          } else {
            cand.right_sum += ips_term(cand.right, e);
            cand.right.update(e);
            ++cand.right_count;
          }
        }
        last_.replay_updates +=
            static_cast<std::int64_t>(kid->candidates.size());
      }
      kid->bank_base_sum = 0.0;
      kid->bank_base_count = 0;
      if (static_cast<std::int64_t>(kid->stored.size()) != kid->own_count) {
        throw std::logic_error("tree: child history and learner disagree");
      }
    } else {
      kid->bank_base_sum = kid->own_sum;
      kid->bank_base_count = kid->own_count;
    }
  }
  node.children = std::move(kids);
  node.active_split = SplitRule{c.feature, c.threshold, which};
  if (config_.mode == TreeMode::kIncremental) node.frozen = true;
  ++last_.structure_changes;
}

void ExpertiseTree::deactivate(TreeNode& node) {
  node.children[0].reset();
  node.children[1].reset();
  node.active_split.reset();
  ++last_.structure_changes;
}

void ExpertiseTree::process_path(TreeNode* node, const Experience& e,
                                 std::size_t idx) {
  const std::int64_t n_min = config_.effective_n_min();
  bool incorporated = false;
  while (node != nullptr) {
    if (!incorporated) absorb(*node, e, idx, true);
    if (node->frozen) {
      // Incremental mode never revisits a split once made.
      break;
    }
    const auto best = evaluate_split(*node, n_min);
    if (!best) {
      if (node->active_split) deactivate(*node);
      break;
    }
    if (!node->active_split || node->active_split->candidate != *best) {
      activate(*node, *best);
      incorporated = true;
    } else {
      incorporated = false;
    }
    if (config_.mode == TreeMode::kIncremental) break;
    node = &node->child_for(e.expertise_ctx);
  }
}

void ExpertiseTree::update(const Experience& e) {
  check_experience(e, config_.learner.n_experts, config_.learner.n_arms);
  if (e.expertise_ctx.size() != static_cast<std::size_t>(config_.n_features)) {
    throw std::invalid_argument("tree: expertise context has wrong length");
  }
  if (e.propensity < config_.learner.floor() - kFloorSlack) {
    throw std::invalid_argument("tree: propensity below exploration floor");
  }
  last_ = UpdateStats{};
  history_.append(e);
  const std::size_t idx = history_.size() - 1;
  if (config_.mode == TreeMode::kFull) {
    process_path(&root_, e, idx);
  } else {
    process_path(mutable_leaf(e.expertise_ctx), e, idx);
  }
  total_path_updates_ += last_.path_updates;
}

namespace {

int depth_of(const TreeNode& n) {
  if (n.is_leaf()) return 0;
  return 1 + std::max(depth_of(*n.children[0]), depth_of(*n.children[1]));
}

int leaves_of(const TreeNode& n) {
  if (n.is_leaf()) return 1;
  return leaves_of(*n.children[0]) + leaves_of(*n.children[1]);
}

void boxes_of(const TreeNode& n, LeafBox box, std::vector<LeafBox>& out) {
  if (n.is_leaf()) {
    out.push_back(std::move(box));
    return;
  }
  const auto f = static_cast<std::size_t>(n.active_split->feature);
  const double tau = n.active_split->threshold;
  LeafBox left = box;
  left.hi[f] = std::min(left.hi[f], tau);
  LeafBox right = std::move(box);
  right.lo[f] = std::max(right.lo[f], tau);
  boxes_of(*n.children[0], std::move(left), out);
  boxes_of(*n.children[1], std::move(right), out);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void text_of(const TreeNode& n, int depth, std::string& out) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  if (n.is_leaf()) {
    out += "leaf n=" + std::to_string(n.own_count) + "\n";
    return;
  }
  out += "split f" + std::to_string(n.active_split->feature) + " @ " +
         format_double(n.active_split->threshold) + "\n";
  text_of(*n.children[0], depth + 1, out);
  text_of(*n.children[1], depth + 1, out);
}

}  // namespace

int ExpertiseTree::depth() const { return depth_of(root_); }

int ExpertiseTree::leaf_count() const { return leaves_of(root_); }

std::vector<LeafBox> ExpertiseTree::leaf_boxes() const {
  const auto g = static_cast<std::size_t>(config_.n_features);
  std::vector<LeafBox> out;
  boxes_of(root_, LeafBox{std::vector<double>(g, 0.0),
                          std::vector<double>(g, 1.0)},
           out);
  return out;
}

std::string ExpertiseTree::to_text() const {
  std::string out;
  text_of(root_, 0, out);
  return out;
}

}  // namespace exptree
