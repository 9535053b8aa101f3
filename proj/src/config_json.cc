#include "exptree/config_json.h"

#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace exptree {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument(std::string("config: unknown key '") + key +
                                  "' in " + where);
    }
  }
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad seed value: " + std::string(s));
  }
  return v;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) return {parse_u64(text)};
  const auto a = parse_u64(text.substr(0, dots));
  const auto b = parse_u64(text.substr(dots + 2));
  if (b < a) throw std::invalid_argument("seed range is empty");
  std::vector<std::uint64_t> out;
  for (auto s = a; s <= b; ++s) out.push_back(s);
  return out;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config: expected object");
  reject_unknown(j,
                 {"algo", "dataset", "N", "g", "m", "T", "kappa", "n_min",
                  "sigma", "p", "learner", "reduction", "identical_experts",
                  "reward_flip", "seeds", "threads", "oracle_gap"},
                 "config");
  if (j.contains("algo")) c.algo = parse_algorithm(j["algo"].get<std::string>());
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    reject_unknown(d, {"synthetic", "csv", "label_column"}, "dataset");
    if (d.contains("csv")) {
      c.dataset.csv_path = d["csv"].get<std::string>();
      c.dataset.label_column = d.value("label_column", c.dataset.label_column);
    }
    if (d.contains("synthetic")) {
      const auto& s = d["synthetic"];
      reject_unknown(s, {"n", "d", "K", "seed"}, "dataset.synthetic");
      c.dataset.csv_path.reset();
      c.dataset.n = s.value("n", c.dataset.n);
      c.dataset.d = s.value("d", c.dataset.d);
      c.dataset.k = s.value("K", c.dataset.k);
      c.dataset.seed = s.value("seed", c.dataset.seed);
    }
  }
  c.n_experts = j.value("N", c.n_experts);
  c.g = j.value("g", c.g);
  c.m = j.value("m", c.m);
  c.horizon = j.value("T", c.horizon);
  c.kappa = j.value("kappa", c.kappa);
  if (j.contains("n_min")) {
    if (j["n_min"].is_null()) {
      c.n_min.reset();
    } else {
      c.n_min = j["n_min"].get<std::int64_t>();
    }
  }
  c.sigma = j.value("sigma", c.sigma);
  c.percent = j.value("p", c.percent);
  if (j.contains("learner")) {
    const auto& l = j["learner"];
    reject_unknown(l, {"kind", "gamma", "ridge", "ucb_width", "eta"}, "learner");
    if (l.contains("kind")) {
      c.learner_kind = parse_learner_kind(l["kind"].get<std::string>());
    }
    c.gamma = l.value("gamma", c.gamma);
    c.ridge = l.value("ridge", c.ridge);
    c.ucb_width = l.value("ucb_width", c.ucb_width);
    if (l.contains("eta") && !l["eta"].is_null()) c.eta = l["eta"].get<double>();
  }
  if (j.contains("reduction")) {
    const auto& r = j["reduction"];
    reject_unknown(r, {"warmup", "bootstrap", "max_depth", "min_leaf"},
                   "reduction");
    c.warmup = r.value("warmup", c.warmup);
    c.bootstrap = r.value("bootstrap", c.bootstrap);
    c.reduction_depth = r.value("max_depth", c.reduction_depth);
    c.reduction_min_leaf = r.value("min_leaf", c.reduction_min_leaf);
  }
  c.identical_experts = j.value("identical_experts", c.identical_experts);
  c.reward_flip = j.value("reward_flip", c.reward_flip);
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    if (s.is_string()) {
      c.seeds = parse_seed_range(s.get<std::string>());
    } else {
      c.seeds = s.get<std::vector<std::uint64_t>>();
    }
  }
  c.threads = j.value("threads", c.threads);
  c.oracle_gap = j.value("oracle_gap", c.oracle_gap);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace exptree
