#include <cmath>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "exptree/baselines.h"
#include "exptree/tree.h"
#include "test_util.h"

namespace exptree {
namespace {

// honest(expert, z): whether the expert gives honest advice at z.
using HonestFn = std::function<bool(int, const ExpertiseContext&)>;

struct World {
  int n_experts;
  int n_arms;
  int g;
  HonestFn honest;
  double noise = 0.1;
};

struct Round {
  ExpertiseContext z;
  AdviceMatrix advice;
  int label;
};

Round draw(const World& w, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, w.noise);
  Round r{testing::random_context(w.g, rng), AdviceMatrix(w.n_experts, w.n_arms),
          static_cast<int>(rng() % static_cast<std::uint64_t>(w.n_arms))};
  for (int n = 0; n < w.n_experts; ++n) {
    const bool h = w.honest(n, r.z);
    for (int k = 0; k < w.n_arms; ++k) {
      const double f = k == r.label ? 1.0 : 0.0;
      r.advice.set(n, k, (h ? f : 1.0 - f) + noise(rng));
    }
  }
  return r;
}

TreeConfig tree_config(TreeMode mode, const World& w, int kappa = 7) {
  TreeConfig c;
  c.mode = mode;
  c.n_features = w.g;
  c.kappa = kappa;
  c.learner.kind = LearnerKind::kLinear;
  c.learner.n_experts = w.n_experts;
  c.learner.n_arms = w.n_arms;
  return c;
}

// Runs the tree for `rounds` steps; `after` is called after every update.
void run(ExpertiseTree& tree, const World& w, int rounds, std::uint64_t seed,
         const std::function<void(const ExpertiseTree&)>& after = {}) {
  Rng env(seed);
  Rng pol(seed ^ 0xABCDEFULL);
  const auto start = static_cast<std::int64_t>(tree.history().size());
  for (int t = 0; t < rounds; ++t) {
    Round r = draw(w, env);
    const Decision d = sample_arm(tree.act(r.advice, r.z), pol);
    Experience e;
    e.advice = r.advice;
    e.arm = d.arm;
    e.reward = d.arm == r.label ? 1.0 : 0.0;
    e.propensity = d.propensity;
    e.expertise_ctx = r.z;
    e.time_index = start + t;
    tree.update(e);
    if (after) after(tree);
  }
}

World two_region_world() {
  return World{2, 3, 2, [](int n, const ExpertiseContext& z) {
                 const bool left = z[0] < 0.5;
                 return n == 0 ? left : !left;
               }};
}

// Expert 0 is honest except in the corner z0 >= 0.5, z1 >= 0.5; expert 1
// is the reverse. One split on z0 or z1 purifies one half; the other half
// needs a second split.
World corner_world(int g) {
  return World{2, 3, g, [](int n, const ExpertiseContext& z) {
                 const bool corner = z[0] >= 0.5 && z[1] >= 0.5;
                 return n == 0 ? !corner : corner;
               }};
}

void collect_leaves(const TreeNode& n, std::vector<const TreeNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  collect_leaves(*n.children[0], out);
  collect_leaves(*n.children[1], out);
}

template <typename F>
void for_each_node(const TreeNode& n, F&& f) {
  f(n);
  if (!n.is_leaf()) {
    for_each_node(*n.children[0], f);
    for_each_node(*n.children[1], f);
  }
}

TEST_CASE("fixed thresholds") {
  CHECK(fixed_thresholds(1) == std::vector<double>{0.5});
  const auto t7 = fixed_thresholds(7);
  REQUIRE(t7.size() == 7);
  for (int j = 0; j < 7; ++j) CHECK(t7[j] == doctest::Approx(0.125 * (j + 1)));
  const auto t4 = fixed_thresholds(4);
  CHECK(t4[0] == doctest::Approx(0.2));
  CHECK(t4[3] == doctest::Approx(0.8));
  CHECK_THROWS_AS(fixed_thresholds(0), std::invalid_argument);
}

TEST_CASE("split predicate sends the threshold to the right") {
  SplitRule s{0, 0.5, 0};
  CHECK(s.goes_left(ExpertiseContext({0.3})));
  CHECK_FALSE(s.goes_left(ExpertiseContext({0.5})));
  CHECK_FALSE(s.goes_left(ExpertiseContext({0.7})));
}

TEST_CASE("unsplit tree") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  const auto path = tree.leaf_for(ExpertiseContext({0.2, 0.9}));
  REQUIRE(path.size() == 1);
  CHECK(path[0] == &tree.root());
  CHECK(tree.depth() == 0);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.to_text() == "leaf n=0\n");
  CHECK(tree.root().candidates.size() == 14);
  CHECK_THROWS_AS(tree.leaf_for(ExpertiseContext({0.2})), std::invalid_argument);
}

TEST_CASE("unsplit tree with exp4 leaf on symmetric advice is uniform") {
  World w = two_region_world();
  auto c = tree_config(TreeMode::kFull, w);
  c.learner.kind = LearnerKind::kExp4;
  ExpertiseTree tree(c);
  const auto d = tree.act(AdviceMatrix(2, 3, std::vector<double>(6, 0.5)),
                          ExpertiseContext({0.1, 0.1}));
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 3));
}

TEST_CASE("single tuple into a fresh tree") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  run(tree, w, 1, 3);
  const TreeNode& root = tree.root();
  CHECK(root.own_count == 1);
  for (const auto& c : root.candidates) {
    CHECK(c.left_count + c.right_count == 1);
  }
  CHECK(tree.to_text() == "leaf n=1\n");
}

TEST_CASE("n_min guard blocks early splits") {
  World w = two_region_world();
  auto c = tree_config(TreeMode::kFull, w);
  c.n_min = 10;
  ExpertiseTree tree(c);
  run(tree, w, 5, 4, [](const ExpertiseTree& t) { CHECK(t.root().is_leaf()); });
  CHECK(c.effective_n_min() == 10);
  c.n_min.reset();
  CHECK(c.effective_n_min() == 6);
}

TreeNode node_with(double own_sum,
                   std::vector<std::tuple<double, double, int, int>> cands) {
  LearnerConfig lc;
  lc.n_experts = 1;
  TreeNode node(fresh(lc));
  node.own_sum = own_sum;
  for (auto [ls, rs, lc_, rc] : cands) {
    node.candidates.push_back(
        CandidateSplit{0, 0.5, fresh(lc), fresh(lc), ls, rs, lc_, rc});
  }
  return node;
}

TEST_CASE("evaluate_split examples") {
  auto a = node_with(10.0, {{6.0, 5.0, 8, 12}, {3.0, 3.0, 10, 10}});
  CHECK(evaluate_split(a, 5) == std::optional<std::size_t>(0));

  auto b = node_with(10.0, {{6.0, 4.0, 8, 12}, {3.0, 3.0, 10, 10}});
  CHECK_FALSE(evaluate_split(b, 5).has_value());

  auto c = node_with(10.0, {{6.0, 5.0, 3, 17}, {5.0, 5.5, 9, 11}});
  CHECK(evaluate_split(c, 5) == std::optional<std::size_t>(1));

  // Ties keep the first candidate.
  auto d = node_with(10.0, {{6.0, 5.0, 10, 10}, {5.0, 6.0, 10, 10}});
  CHECK(evaluate_split(d, 5) == std::optional<std::size_t>(0));

  // The comparison uses the node's sum since the bank was created.
  auto e = node_with(30.0, {{6.0, 5.0, 10, 10}});
  CHECK_FALSE(evaluate_split(e, 5).has_value());
  e.bank_base_sum = 20.0;
  CHECK(evaluate_split(e, 5).has_value());
}

TEST_CASE("two-region world splits at the boundary") {
  World w = two_region_world();
  int hits = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    ExpertiseTree tree(tree_config(TreeMode::kFull, w));
    run(tree, w, 2000, 500 + s);
    const auto& split = tree.root().active_split;
    if (split && split->feature == 0 && split->threshold == 0.5) ++hits;
  }
  INFO("hits=" << hits);
  CHECK(hits >= 16);
}

TEST_CASE("trained tree routes by its splits") {
  World w = corner_world(3);
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  run(tree, w, 1500, 7);
  REQUIRE(tree.depth() >= 2);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto z = testing::random_context(3, rng);
    const auto path = tree.leaf_for(z);
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
      const auto& s = *path[j]->active_split;
      const bool left = z[s.feature] < s.threshold;
      CHECK(path[j + 1] == path[j]->children[left ? 0 : 1].get());
    }
    CHECK(path.back()->is_leaf());
    const auto adv = testing::random_advice(2, 3, rng);
    CHECK(tree.act(adv, z).probs == path.back()->learner.act(adv).probs);
  }
}

TEST_CASE("two leaves with different learners give their own distributions") {
  World w = two_region_world();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ExpertiseTree tree(tree_config(TreeMode::kFull, w));
    run(tree, w, 2000, 900 + seed);
    const auto& split = tree.root().active_split;
    if (!split || split->feature != 0 || split->threshold != 0.5 ||
        tree.depth() != 1) {
      continue;
    }
    // Advice where expert 0 points at arm 0 and expert 1 at arm 1.
    const AdviceMatrix a(2, 3, {1, 0, 0, 0, 1, 0});
    const auto left = tree.act(a, ExpertiseContext({0.2, 0.5}));
    const auto right = tree.act(a, ExpertiseContext({0.8, 0.5}));
    CHECK(left.probs == tree.root().children[0]->learner.act(a).probs);
    CHECK(right.probs == tree.root().children[1]->learner.act(a).probs);
    CHECK(tree.leaf_count() == 2);
    CHECK(left.probs[0] > 0.9);
    CHECK(right.probs[1] > 0.9);
    return;
  }
  FAIL("no seed produced a single boundary split");
}

TEST_CASE("depth and leaf count") {
  World w = corner_world(2);
  bool saw_two = false;
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  run(tree, w, 2000, 11, [&](const ExpertiseTree& t) {
    std::vector<const TreeNode*> leaves;
    collect_leaves(t.root(), leaves);
    CHECK(t.leaf_count() == static_cast<int>(leaves.size()));
    if (t.depth() == 1) CHECK(t.leaf_count() == 2);
    CHECK(t.leaf_count() >= t.depth() + 1);
    CHECK(t.leaf_count() <= (1 << t.depth()));
    if (t.depth() == 2) saw_two = true;
  });
  CHECK(saw_two);
}

void check_partition(const ExpertiseTree& tree, int g, std::uint64_t seed) {
  const auto boxes = tree.leaf_boxes();
  std::vector<const TreeNode*> leaves;
  collect_leaves(tree.root(), leaves);
  REQUIRE(boxes.size() == leaves.size());
  double volume = 0.0;
  for (const auto& b : boxes) volume += b.volume();
  CHECK(volume == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      double overlap = 1.0;
      for (int f = 0; f < g; ++f) {
        overlap *= std::max(0.0, std::min(boxes[i].hi[f], boxes[j].hi[f]) -
                                     std::max(boxes[i].lo[f], boxes[j].lo[f]));
      }
      CHECK(overlap == 0.0);
    }
  }
  Rng rng(seed);
  for (int i = 0; i < 10000; ++i) {
    auto z = testing::random_context(g, rng);
    // Put some coordinates exactly on the threshold grid.
    if (i % 4 == 0) z.values[i % g] = 0.125 * static_cast<double>(rng() % 9);
    int hits = 0;
    std::size_t hit = 0;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (boxes[b].contains(z)) {
        ++hits;
        hit = b;
      }
    }
    CHECK(hits == 1);
    CHECK(leaves[hit] == tree.leaf_for(z).back());
  }
}

TEST_CASE("partition property") {
  for (TreeMode mode : {TreeMode::kFull, TreeMode::kIncremental}) {
    World w = corner_world(3);
    ExpertiseTree tree(tree_config(mode, w));
    run(tree, w, 2000, 21);
    CHECK(tree.leaf_count() >= 3);
    check_partition(tree, 3, 77);
  }
}

TEST_CASE("candidate conservation") {
  for (TreeMode mode : {TreeMode::kFull, TreeMode::kIncremental}) {
    World w = corner_world(2);
    ExpertiseTree tree(tree_config(mode, w));
    run(tree, w, 800, 5, [](const ExpertiseTree& t) {
      for_each_node(t.root(), [](const TreeNode& n) {
        for (const auto& c : n.candidates) {
          CHECK(c.left_count + c.right_count == n.own_count - n.bank_base_count);
        }
      });
    });
  }
}

TEST_CASE("incremental splits never change") {
  World w = corner_world(3);
  ExpertiseTree tree(tree_config(TreeMode::kIncremental, w));
  std::map<const TreeNode*, std::pair<int, double>> seen;
  int changes = 0;
  run(tree, w, 2000, 13, [&](const ExpertiseTree& t) {
    for_each_node(t.root(), [&](const TreeNode& n) {
      if (n.is_leaf()) return;
      CHECK(n.frozen);
      const std::pair<int, double> s{n.active_split->feature,
                                     n.active_split->threshold};
      auto [it, inserted] = seen.emplace(&n, s);
      if (inserted) {
        ++changes;
      } else {
        CHECK(it->second == s);
      }
    });
  });
  CHECK(changes >= 2);
  // Every recorded node is still in the tree.
  std::size_t internal = 0;
  for_each_node(tree.root(), [&](const TreeNode& n) { internal += !n.is_leaf(); });
  CHECK(internal == seen.size());
}

TEST_CASE("incremental child banks start empty") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kIncremental, w));
  bool checked = false;
  run(tree, w, 1000, 8, [&](const ExpertiseTree& t) {
    if (checked || t.root().is_leaf()) return;
    for (const auto& kid : t.root().children) {
      CHECK(kid->bank_base_count == kid->own_count);
      for (const auto& c : kid->candidates) {
        CHECK(c.left_count + c.right_count == 0);
      }
    }
    checked = true;
  });
  CHECK(checked);
}

TEST_CASE("full-mode child banks are replayed from the sub-history") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  bool checked = false;
  run(tree, w, 1000, 8, [&](const ExpertiseTree& t) {
    if (checked || t.root().is_leaf() || t.last_update().structure_changes == 0) {
      return;
    }
    for (const auto& kid : t.root().children) {
      CHECK(kid->bank_base_count == 0);
      CHECK(static_cast<std::int64_t>(kid->stored.size()) == kid->own_count);
      for (const auto& c : kid->candidates) {
        CHECK(c.left_count + c.right_count == kid->own_count);
      }
    }
    CHECK(t.last_update().replay_updates > 0);
    checked = true;
  });
  CHECK(checked);
}

TEST_CASE("exact per-step update counts") {
  World w = corner_world(4);
  const int kappa = 5;
  const std::int64_t per_node = 4 * kappa + 1;
  SUBCASE("incremental") {
    ExpertiseTree tree(tree_config(TreeMode::kIncremental, w, kappa));
    run(tree, w, 1500, 3, [&](const ExpertiseTree& t) {
      CHECK(t.last_update().nodes_updated == 1);
      CHECK(t.last_update().path_updates == per_node);
    });
    CHECK(tree.depth() >= 2);
  }
  SUBCASE("full") {
    ExpertiseTree tree(tree_config(TreeMode::kFull, w, kappa));
    int stable_deep_steps = 0;
    Rng env(3);
    Rng pol(4);
    for (int t = 0; t < 1500; ++t) {
      Round r = draw(w, env);
      const auto depth_before =
          static_cast<std::int64_t>(tree.leaf_for(r.z).size()) - 1;
      const Decision d = sample_arm(tree.act(r.advice, r.z), pol);
      Experience e;
      e.advice = r.advice;
      e.arm = d.arm;
      e.reward = d.arm == r.label ? 1.0 : 0.0;
      e.propensity = d.propensity;
      e.expertise_ctx = r.z;
      e.time_index = t;
      tree.update(e);
      if (tree.last_update().structure_changes == 0) {
        CHECK(tree.last_update().path_updates == (depth_before + 1) * per_node);
        CHECK(tree.last_update().replay_updates == 0);
        stable_deep_steps += depth_before >= 2;
      }
    }
    CHECK(stable_deep_steps > 100);
  }
}

TEST_CASE("text format") {
  World w = corner_world(2);
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  run(tree, w, 1500, 11);
  REQUIRE(tree.depth() >= 1);
  const std::string text = tree.to_text();
  std::istringstream in(text);
  std::string line;
  const std::regex split_re(R"(( *)split f(\d+) @ ([0-9.e-]+))");
  const std::regex leaf_re(R"(( *)leaf n=(\d+))");
  int leaves = 0;
  std::int64_t total = 0;
  std::smatch m;
  std::getline(in, line);
  CHECK(line.rfind("split f", 0) == 0);
  in.seekg(0);
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, leaf_re)) {
      CHECK(m[1].length() % 2 == 0);
      ++leaves;
      total += std::stoll(m[2]);
    } else {
      CHECK(std::regex_match(line, m, split_re));
      CHECK(m[1].length() % 2 == 0);
    }
  }
  CHECK(leaves == tree.leaf_count());
  const auto& rs = *tree.root().active_split;
  std::ostringstream first;
  first << "split f" << rs.feature << " @ " << rs.threshold;
  CHECK(text.substr(0, text.find('\n')) == first.str());
  CHECK(total <= 1500);
}

TEST_CASE("flat-equivalence before any split") {
  // All experts share one heatmap cell, so the world has one region.
  World w{3, 3, 2, [](int, const ExpertiseContext&) { return true; }, 0.3};
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ExpertiseTree tree(tree_config(TreeMode::kFull, w));
    FlatPolicy flat(tree.config().learner);
    Rng env(seed);
    Rng tree_rng(seed + 100);
    Rng flat_rng(seed + 100);
    for (int t = 0; t < 400 && tree.root().is_leaf(); ++t) {
      Round r = draw(w, env);
      const Decision dt = sample_arm(tree.act(r.advice, r.z), tree_rng);
      const Decision df = flat.act(r.advice, r.z, flat_rng);
      REQUIRE(dt.arm == df.arm);
      REQUIRE(dt.propensity == df.propensity);
      Experience e;
      e.advice = r.advice;
      e.arm = dt.arm;
      e.reward = dt.arm == r.label ? 1.0 : 0.0;
      e.propensity = dt.propensity;
      e.expertise_ctx = r.z;
      e.time_index = t;
      tree.update(e);
      flat.update(e);
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("tree update rejects bad tuples") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  Experience e;
  e.advice = AdviceMatrix(2, 3);
  e.arm = 0;
  e.reward = 1.0;
  e.propensity = 0.001;
  e.expertise_ctx = ExpertiseContext({0.5, 0.5});
  CHECK_THROWS_AS(tree.update(e), std::invalid_argument);
  e.propensity = 0.5;
  e.expertise_ctx = ExpertiseContext({0.5});
  CHECK_THROWS_AS(tree.update(e), std::invalid_argument);
  e.expertise_ctx = ExpertiseContext({0.5, 0.5});
  e.advice = AdviceMatrix(3, 3);
  CHECK_THROWS_AS(tree.update(e), std::invalid_argument);
}

TEST_CASE("copies are independent") {
  World w = two_region_world();
  ExpertiseTree tree(tree_config(TreeMode::kFull, w));
  run(tree, w, 600, 2);
  ExpertiseTree copy = tree;
  CHECK(copy.to_text() == tree.to_text());
  run(copy, w, 300, 9);
  CHECK(tree.history().size() == 600);
  CHECK(copy.history().size() == 900);
}

}  // namespace
}  // namespace exptree
