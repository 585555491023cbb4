#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <string>

#include "seerdrive/model/model.hpp"
#include "seerdrive/scenario/types.hpp"
#include "seerdrive/train/losses.hpp"

namespace seerdrive::train {

struct TrainConfig {
  model::ModelConfig model;
  double lr = 2e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int epochs = 20;
  int batch_size = 8;
  uint64_t seed = 0;
  Lambdas lambdas;  // 10 / 0.1 / 1

  std::string canonical_json() const;
  uint64_t hash() const;
  static TrainConfig from_json_text(const std::string& text);
  static TrainConfig from_json_file(const std::string& path);
  // "lr=1e-3", "epochs=3", "lambda1=5", or model keys ("channels=32", ...)
  void apply_override(const std::string& kv);
};

struct TrainResult {
  std::unique_ptr<model::Model> model;
  uint64_t steps = 0;
  double final_loss = 0.0;
};

// End-to-end training. Deterministic given cfg.seed: fixed shuffles, fixed
// reduction orders, parameters snapped to the f32 grid after every update.
// Writes one structured text line per step to `loss_log` when given. Aborts
// with DivergenceError naming the first non-finite loss component.
TrainResult run_training(const std::vector<scenario::Scenario>& dataset,
                  const anchors::AnchorSet& anchor_set, const TrainConfig& cfg,
                  std::ostream* loss_log = nullptr,
                  const std::function<void(uint64_t step, const LossBreakdown&)>& on_step = {});

}  // namespace seerdrive::train
