#pragma once

// JSON experiment configs. Keys mirror ExperimentConfig:
//
//   {
//     "algo": "tree",
//     "dataset": {"synthetic": {"n": 5000, "d": 16, "K": 5, "seed": 0}},
//       or      {"csv": "data.csv", "label_column": "class"},
//     "N": 8, "g": 8, "m": 4, "T": 1000, "kappa": 7, "n_min": 10,
//     "sigma": 0.1, "p": 10,
//     "learner": {"kind": "linear", "gamma": 0.05, "ridge": 1.0,
//                 "ucb_width": 1.0, "eta": 0.1},
//     "reduction": {"warmup": 5, "bootstrap": 1, "max_depth": 6,
//                   "min_leaf": 5},
//     "identical_experts": false, "reward_flip": 0.0,
//     "seeds": [0, 1, 2] or "0..19", "threads": 1, "oracle_gap": true
//   }
//
// Missing keys keep their defaults; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "exptree/experiment.h"
#include "json.hpp"

namespace exptree {

// "a..b" (inclusive) or a single integer.
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace exptree
