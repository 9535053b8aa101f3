#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include <unistd.h>

#include "doctest.h"
#include "exptree/env.h"
#include "test_util.h"

namespace exptree {
namespace {

namespace fs = std::filesystem;

struct TempCsv {
  fs::path path;
  explicit TempCsv(const std::string& body, const std::string& name = "data.csv") {
    const auto dir = fs::temp_directory_path() /
                     ("exptree_env_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    path = dir / name;
    std::ofstream(path) << body;
  }
  ~TempCsv() { fs::remove_all(path.parent_path()); }
};

TEST_CASE("csv: one-hot plus min-max") {
  TempCsv f("colour,size,class\nred,10,a\ngreen,20,b\nblue,30,a\nred,20,b\n");
  const Dataset d = load_csv_dataset(f.path, "class");
  CHECK(d.n_rows == 4);
  CHECK(d.n_features == 4);
  CHECK(d.n_classes == 2);
  CHECK(d.name == "data");
  CHECK(d.feature_names ==
        std::vector<std::string>{"colour=blue", "colour=green", "colour=red", "size"});
  // Row 1: green, 20.
  const auto r1 = d.row(1);
  CHECK(r1[0] == 0.0);
  CHECK(r1[1] == 1.0);
  CHECK(r1[2] == 0.0);
  CHECK(r1[3] == doctest::Approx(0.5));
  CHECK(d.labels == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("csv: constant numeric column maps to zero") {
  TempCsv f("x,y,label\n5,1,0\n5,2,1\n5,3,1\n");
  const Dataset d = load_csv_dataset(f.path, "label");
  for (std::size_t i = 0; i < d.n_rows; ++i) CHECK(d.row(i)[0] == 0.0);
  CHECK(d.row(2)[1] == 1.0);
}

TEST_CASE("csv: loading twice is identical") {
  TempCsv f("a,b,c,class\n1,x,0.5,p\n2,y,0.25,q\n3,x,0.75,r\n0,z,1,p\n");
  const Dataset a = load_csv_dataset(f.path, "class");
  const Dataset b = load_csv_dataset(f.path, "class");
  CHECK(a.rows == b.rows);
  CHECK(a.labels == b.labels);
  CHECK(a.n_classes == 3);
}

TEST_CASE("csv: numeric labels factorize in numeric order") {
  TempCsv f("x,class\n0.1,10\n0.2,9\n0.3,10\n");
  const Dataset d = load_csv_dataset(f.path, "class");
  CHECK(d.labels == std::vector<int>{1, 0, 1});
}

TEST_CASE("csv: quoted fields") {
  TempCsv f("name,v,class\n\"a, b\",1,x\n\"c\",2,y\n");
  const Dataset d = load_csv_dataset(f.path, "class");
  CHECK(d.feature_names[0] == "name=a, b");
}

TEST_CASE("csv: errors") {
  {
    TempCsv f("x,class\n1,a\n,b\n");
    CHECK_THROWS_AS(load_csv_dataset(f.path, "class"), std::invalid_argument);
  }
  {
    TempCsv f("x,class\n1,a\n2,a\n");
    CHECK_THROWS_AS(load_csv_dataset(f.path, "class"), std::invalid_argument);
  }
  {
    TempCsv f("x,y\n1,a\n2,b\n");
    CHECK_THROWS_AS(load_csv_dataset(f.path, "class"), std::invalid_argument);
  }
  {
    TempCsv f("x,class\n1,a,3\n2,b\n");
    CHECK_THROWS_AS(load_csv_dataset(f.path, "class"), std::invalid_argument);
  }
  CHECK_THROWS(load_csv_dataset("/nonexistent/file.csv", "class"));
}

TEST_CASE("synthetic: deterministic per seed") {
  const Dataset a = gen_synthetic_dataset(500, 6, 4, 3);
  const Dataset b = gen_synthetic_dataset(500, 6, 4, 3);
  const Dataset c = gen_synthetic_dataset(500, 6, 4, 4);
  CHECK(a.rows == b.rows);
  CHECK(a.labels == b.labels);
  CHECK(a.rows != c.rows);
  CHECK_NOTHROW(a.validate());
  for (double v : a.rows) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("synthetic: constructed boundary at 0.5") {
  const std::vector<LinearScorer> scorers{{{1.0}, 0.0}, {{-1.0}, 1.0}};
  const Dataset d = gen_synthetic_dataset(2000, scorers, 7);
  int checked = 0;
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    const double x = d.row(i)[0];
    if (std::abs(x - 0.5) < 1e-12) continue;
    CHECK(d.labels[i] == (x > 0.5 ? 0 : 1));
    ++checked;
  }
  CHECK(checked > 1990);
}

TEST_CASE("synthetic: every class appears") {
  for (int k : {2, 3, 5, 8}) {
    const Dataset d = gen_synthetic_dataset(10000, 16, k, 11);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
    for (int c : counts) CHECK(c > 0);
  }
}

TEST_CASE("expertise setup structure") {
  const auto s = gen_expertise_setup(16, 8, 8, 5, 1, 0.1);
  CHECK(s.g() == 8);
  CHECK(s.n_experts() == 5);
  CHECK(s.regions() == 64);
  for (const auto& h : s.heatmaps) {
    CHECK(h.size() == 64);
    for (auto v : h) CHECK((v == 0 || v == 1));
  }
  std::set<int> idx(s.g_indices.begin(), s.g_indices.end());
  CHECK(idx.size() == 8);
  for (int i : s.g_indices) CHECK((i >= 0 && i < 16));
  CHECK(s.rel_pair[0] != s.rel_pair[1]);
  for (int p : s.rel_pair) CHECK((p >= 0 && p < 8));

  const auto one = gen_expertise_setup(16, 8, 1, 5, 1, 0.1);
  for (const auto& h : one.heatmaps) CHECK(h.size() == 1);

  const auto again = gen_expertise_setup(16, 8, 8, 5, 1, 0.1);
  CHECK(again.heatmaps == s.heatmaps);
  CHECK(again.g_indices == s.g_indices);
}

TEST_CASE("expertise setup errors") {
  CHECK_THROWS_AS(gen_expertise_setup(4, 5, 2, 2, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(gen_expertise_setup(8, 4, 3, 2, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(gen_expertise_setup(8, 4, 2, 0, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(gen_expertise_setup(8, 4, 2, 2, 0, -1.0), std::invalid_argument);
}

TEST_CASE("heatmap cells are fair coins") {
  double sum = 0.0;
  int cells = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = gen_expertise_setup(16, 8, 2, 1, seed, 0.1);
    for (auto v : s.heatmaps[0]) {
      sum += v;
      ++cells;
    }
  }
  CHECK(std::abs(sum / cells - 0.5) <= 0.05);
}

TEST_CASE("region id examples") {
  CHECK(region_id(0.95, 0.20, 8) == 57);
  for (int m : {1, 2, 4, 8}) {
    CHECK(region_id(1.0, 1.0, m) == m * m - 1);
    CHECK(region_id(0.0, 0.0, m) == 0);
  }
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto z = testing::random_vector(2, rng, 0.0, 1.0);
    CHECK(region_id(z[0], z[1], 1) == 0);
  }
}

TEST_CASE("regions are total and surjective") {
  Rng rng(3);
  for (int m : {1, 2, 4, 8}) {
    std::set<int> seen;
    for (int i = 0; i < 10000; ++i) {
      const auto z = testing::random_vector(2, rng, 0.0, 1.0);
      const int r = region_id(z[0], z[1], m);
      REQUIRE((r >= 0 && r < m * m));
      seen.insert(r);
    }
    CHECK(static_cast<int>(seen.size()) == m * m);
  }
}

ExpertiseSetup single_expert(std::uint8_t e, double sigma) {
  ExpertiseSetup s;
  s.g_indices = {0, 1};
  s.rel_pair = {0, 1};
  s.m = 1;
  s.heatmaps = {{e}};
  s.advice_noise = sigma;
  return s;
}

TEST_CASE("advice examples") {
  Rng rng(0);
  const ExpertiseContext z({0.3, 0.3});
  const std::vector<double> truth{1, 0, 0};
  CHECK(gen_advice(single_expert(1, 0.0), 0, z, truth, rng) ==
        std::vector<double>{1, 0, 0});
  CHECK(gen_advice(single_expert(0, 0.0), 0, z, truth, rng) ==
        std::vector<double>{0, 1, 1});
}

TEST_CASE("advice noise magnitude") {
  // Entries sit at 0 or 1, so clipping keeps the inward half of the noise:
  // E|clip(f + N) - f| = E[max(0, N)] = sigma / sqrt(2 pi).
  const double sigma = 0.1;
  const double expected = sigma / std::sqrt(2.0 * std::numbers::pi);
  Rng rng(5);
  const auto honest = single_expert(1, sigma);
  const ExpertiseContext z({0.5, 0.5});
  const std::vector<double> truth{0, 1, 0};
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = gen_advice(honest, 0, z, truth, rng);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK((a[k] >= 0.0 && a[k] <= 1.0));
      const double dev = std::abs(a[k] - truth[k]);
      sum += dev;
      sum_sq += dev * dev;
      ++n;
    }
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  INFO("mean " << mean << " expected " << expected << " se " << se);
  CHECK(std::abs(mean - expected) <= 4.0 * se);
}

TEST_CASE("bandit round: single row dataset") {
  const Dataset d = gen_synthetic_dataset(1, 5, 3, 0);
  const auto s = gen_expertise_setup(5, 3, 2, 2, 0, 0.1);
  Rng rng(0);
  for (int i = 0; i < 20; ++i) {
    const auto r = bandit_round(d, s, rng);
    CHECK(r.row_index == 0);
    CHECK(r.label == d.labels[0]);
  }
}

TEST_CASE("bandit round invariants") {
  const Dataset d = gen_synthetic_dataset(300, 10, 4, 2);
  const auto s = gen_expertise_setup(10, 6, 4, 3, 2, 0.1);
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto r = bandit_round(d, s, rng);
    int ones = 0;
    for (std::size_t k = 0; k < r.true_rewards.size(); ++k) {
      ones += r.true_rewards[k] == 1.0;
      CHECK((r.true_rewards[k] == 0.0 || r.true_rewards[k] == 1.0));
    }
    CHECK(ones == 1);
    CHECK(r.true_rewards[static_cast<std::size_t>(r.label)] == 1.0);
    REQUIRE(r.expertise_ctx.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(r.expertise_ctx[j] ==
            r.full_ctx.values[static_cast<std::size_t>(s.g_indices[j])]);
    }
    CHECK(r.full_ctx.values ==
          std::vector<double>(d.row(r.row_index).begin(), d.row(r.row_index).end()));
    CHECK(r.region == region_of(s, r.expertise_ctx));
    CHECK(r.advice.n_experts() == 3);
    for (double v : r.advice.values()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("rows are sampled uniformly with replacement") {
  const Dataset d = gen_synthetic_dataset(10, 3, 2, 9);
  const auto s = gen_expertise_setup(3, 2, 1, 1, 9, 0.0);
  Rng rng(10);
  std::vector<int> counts(10, 0);
  const int rounds = 100000;
  for (int i = 0; i < rounds; ++i) ++counts[bandit_round(d, s, rng).row_index];
  for (int c : counts) CHECK(std::abs(c / double(rounds) - 0.1) <= 0.02);
}

TEST_CASE("environment rewards") {
  auto d = std::make_shared<const Dataset>(gen_synthetic_dataset(100, 4, 3, 1));
  BanditEnvironment env(d, gen_expertise_setup(4, 2, 2, 2, 1, 0.1), 5);
  for (int i = 0; i < 200; ++i) {
    const auto r = env.next_round();
    for (int k = 0; k < 3; ++k) CHECK(env.reward(r, k) == (k == r.label ? 1.0 : 0.0));
  }
  BanditEnvironment flipped(d, gen_expertise_setup(4, 2, 2, 2, 1, 0.1), 5, 1.0);
  const auto r = flipped.next_round();
  CHECK(flipped.reward(r, r.label) == 0.0);
}

TEST_CASE("environment is deterministic per seed") {
  auto d = std::make_shared<const Dataset>(gen_synthetic_dataset(100, 4, 3, 1));
  const auto s = gen_expertise_setup(4, 2, 2, 2, 1, 0.1);
  BanditEnvironment a(d, s, 5), b(d, s, 5);
  for (int i = 0; i < 100; ++i) {
    const auto ra = a.next_round();
    const auto rb = b.next_round();
    CHECK(ra.row_index == rb.row_index);
    CHECK(ra.advice == rb.advice);
  }
}

}  // namespace
}  // namespace exptree
