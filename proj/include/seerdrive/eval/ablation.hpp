#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "seerdrive/eval/evaluate.hpp"
#include "seerdrive/train/trainer.hpp"

namespace seerdrive::eval {

struct AblationVariant {
  std::string name;  // "base" or "axis=value"
  train::TrainConfig cfg;
};

// Axis syntax: "future_bev:off;iterations:1,3;fusion:cat,add". Each value
// yields one variant diffed against the base run. Supported axes:
//   future_bev(off), decouple(off), iterations(N), fusion(mln|cat|add),
//   future_init(endpoints|trajectories|learned|random), winner(min_ade|score),
//   per_iteration_weights(on), mode_mix_attention(on).
std::vector<AblationVariant> parse_axes(const std::string& axes, const train::TrainConfig& base);

struct AblationRow {
  std::string variant;
  uint64_t seed = 0;
  MetricsReport report;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::string table;  // tab-separated, with per-variant mean/sd and delta rows
};

// Trains each variant over `n_seeds` consecutive seeds with a shared seed
// schedule and evaluates on the test split. Intermediate checkpoints land in
// `cache_dir` when non-empty.
AblationResult run_ablation(const std::vector<scenario::Scenario>& train_split,
                            const std::vector<scenario::Scenario>& test_split,
                            const anchors::AnchorSet& anchor_set,
                            const train::TrainConfig& base, const std::string& axes, int n_seeds,
                            const std::string& cache_dir = "", std::ostream* progress = nullptr);

}  // namespace seerdrive::eval
