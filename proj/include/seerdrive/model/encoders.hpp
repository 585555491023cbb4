#pragma once

#include "seerdrive/core/graph.hpp"
#include "seerdrive/model/model.hpp"
#include "seerdrive/scenario/types.hpp"

namespace seerdrive::model {

// One-hot class planes of a semantic grid, [R, R, K].
Tensor grid_one_hot(const scenario::SemanticGrid& g);

// Per-mode embedding input rows: flattened anchor waypoints (coord-scaled)
// concatenated with the shared ego status (velocity, acceleration, command).
// Shape [M, 2T + 7].
Tensor ego_encoder_input(const anchors::AnchorSet& anchors, const scenario::EgoStatus& status);

// Batched observation encoder: [B, R, R, K] one-hot -> [B, HW, C] tokens.
// Non-overlapping patch windows keep each token's receptive field local.
Var encode_bev_tokens(Graph& g, const Model& m, Var grid_onehot);

// [B, M, 2T+7] -> [B, M, C]
Var encode_ego(Graph& g, const Model& m, Var ego_inputs);

// Shared map head: [..., HW, C] tokens -> [..., R, R, K] logits.
Var decode_bev_tokens(Graph& g, const Model& m, Var tokens);

}  // namespace seerdrive::model
