#pragma once

#include "seerdrive/core/graph.hpp"
#include "seerdrive/model/model.hpp"

namespace seerdrive::model {

struct PlanVars {
  Var traj_a;       // [B, M, T, 2]
  Var traj_b;       // [B, M, T, 2]
  Var traj_final;   // [B, M, T, 2]
  Var mode_logits;  // [B, M] (from the current-branch feature)
  Var fused_ego;    // [B, M, C] (fed back by the iteration loop)
};

// Test hook used by the decoupling invariant: `Zeroed` replaces the future
// branch output with a zero tensor while keeping the fusion path.
enum class FutureMode { Normal, Zeroed };

// Current-branch cross attention: [B, M, C] x [B, HW, C] -> [B, M, C].
Var attend_current(Graph& g, const Model& m, Var ego_feature, Var bev_tokens, int iteration);

// Embed per-mode initialization for the future branch -> [B, M, C].
Var init_future_ego(Graph& g, const Model& m, int64_t batch, int iteration);

// Mode m attends only to its own future BEV tokens: [B, M, C] x [B, M, H, W, C].
Var attend_future(Graph& g, const Model& m, Var future_ego, Var future_bev, int iteration);

// Modulated normalization: gamma(fut) * LN(curr) + beta(fut); the generators
// are zero-initialized so this is exactly LN(curr) at init.
Var fuse_mln(Graph& g, const Model& m, Var f_curr, Var f_fut, int iteration);

// Anchor-residual trajectory head: anchors + offsets(f). Offset heads are
// zero-initialized, so the initial output equals the anchors bit-exactly.
Var decode_traj(Graph& g, const Model& m, Var feature, const MlpIds& head);
Var mode_scores(Graph& g, const Model& m, Var feature, int iteration);

PlanVars plan_step(Graph& g, const Model& m, Var ego_feature, Var bev_tokens, Var future_bev,
                   int iteration, FutureMode mode = FutureMode::Normal);

}  // namespace seerdrive::model
