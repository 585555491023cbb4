#pragma once

#include <vector>

#include "seerdrive/model/planner.hpp"
#include "seerdrive/model/world_model.hpp"

namespace seerdrive::model {

enum class MapDecode { All, None };

struct IterationStep {
  Var future_bev;         // [B, M, H, W, C]
  Var future_map_logits;  // [B, M, R, R, K] when MapDecode::All
  PlanVars plan;
};

struct IterationTrace {
  std::vector<IterationStep> steps;
};

// Runs world modeling and planning N times, feeding the fused ego feature
// back into the scene assembly. Weights are shared across iterations unless
// the model was built with per_iteration_weights.
IterationTrace run_iterations(Graph& g, const Model& m, Var bev_tokens, Var ego_feature0,
                              int n_iterations, MapDecode decode_maps = MapDecode::All,
                              FutureMode future_mode = FutureMode::Normal);

}  // namespace seerdrive::model
