#pragma once

#include "seerdrive/core/graph.hpp"
#include "seerdrive/model/model.hpp"

namespace seerdrive::model {

// Scene tokens: the BEV token map repeated per mode with that mode's ego
// token appended. bev: [B, HW, C], ego: [B, M, C] -> [B, M, HW+1, C].
Var assemble_scene(Graph& g, const Model& m, Var bev_tokens, Var ego_feature);

struct FuturePrediction {
  Var scene;       // [B, M, HW+1, C]
  Var future_bev;  // [B, M, H, W, C]
};

// Transformer encoder over the token axis. Attention stays within each mode
// unless config.mode_mix_attention is set.
FuturePrediction predict_future(Graph& g, const Model& m, Var scene, int iteration);

// Shared BEV decoder applied per mode: [B, M, H, W, C] -> [B, M, R, R, K].
Var decode_future_map(Graph& g, const Model& m, Var future_bev);

}  // namespace seerdrive::model
