#include "seerdrive/model/planner.hpp"

#include "seerdrive/model/blocks.hpp"

namespace seerdrive::model {

namespace {

// anchors + reshaped offsets
Var anchor_residual(Graph& g, const Model& m, Var offsets_flat, int64_t batch) {
  const auto& cfg = m.config();
  Var anchors = g.input(m.anchor_set().anchors);  // [M, T, 2]
  Var expanded = g.expand(anchors, 0, batch);     // [B, M, T, 2]
  Var offs = g.reshape(offsets_flat, {batch, static_cast<int64_t>(cfg.modes),
                                      static_cast<int64_t>(cfg.horizon), 2});
  return g.add(expanded, offs);
}

Var future_tokens(Graph& g, const Model& m, Var future_bev) {
  const auto& cfg = m.config();
  const int64_t b = g.val(future_bev).dim(0);
  return g.reshape(future_bev,
                   {b, static_cast<int64_t>(cfg.modes), static_cast<int64_t>(cfg.tokens()),
                    static_cast<int64_t>(cfg.channels)});
}

}  // namespace

Var attend_current(Graph& g, const Model& m, Var ego_feature, Var bev_tokens, int iteration) {
  return cross_block(g, ego_feature, bev_tokens, m.planner_ids(iteration).cur, m.config().heads);
}

Var init_future_ego(Graph& g, const Model& m, int64_t batch, int iteration) {
  const auto& cfg = m.config();
  const PlannerIds& ids = m.planner_ids(iteration);
  const auto& aset = m.anchor_set();
  Var feat{-1};
  switch (cfg.future_init) {
    case FutureInit::Endpoints: {
      Tensor ep = aset.endpoints();
      for (int64_t i = 0; i < ep.numel(); ++i) ep[i] *= kCoordScale;
      feat = mlp(g, g.input(std::move(ep)), ids.future_init);
      break;
    }
    case FutureInit::Trajectories: {
      Tensor flat({aset.modes(), aset.horizon() * 2});
      for (int64_t i = 0; i < flat.numel(); ++i) flat[i] = aset.anchors[i] * kCoordScale;
      feat = mlp(g, g.input(std::move(flat)), ids.future_init);
      break;
    }
    case FutureInit::Learned:
      feat = g.param(ids.future_query);
      break;
  }
  return g.expand(feat, 0, batch);  // [B, M, C]
}

Var attend_future(Graph& g, const Model& m, Var future_ego, Var future_bev, int iteration) {
  const auto& cfg = m.config();
  const auto& es = g.val(future_ego).shape();
  const int64_t b = es[0];
  Var q = g.reshape(future_ego, {b, static_cast<int64_t>(cfg.modes), 1,
                                 static_cast<int64_t>(cfg.channels)});
  Var mem = future_tokens(g, m, future_bev);
  Var out = cross_block(g, q, mem, m.planner_ids(iteration).fut, cfg.heads);
  return g.reshape(out, es);
}

Var fuse_mln(Graph& g, const Model& m, Var f_curr, Var f_fut, int iteration) {
  const PlannerIds& ids = m.planner_ids(iteration);
  Var ln = g.layer_norm(f_curr, kLnEps);
  Var gamma_raw = mlp(g, f_fut, ids.mln_gamma);  // zero at init
  Var beta = mlp(g, f_fut, ids.mln_beta);        // zero at init
  // (1 + gamma_raw) .* ln + beta
  return g.add(g.add(ln, g.mul(gamma_raw, ln)), beta);
}

Var decode_traj(Graph& g, const Model& m, Var feature, const MlpIds& head) {
  const int64_t b = g.val(feature).dim(0);
  return anchor_residual(g, m, mlp(g, feature, head), b);
}

Var mode_scores(Graph& g, const Model& m, Var feature, int iteration) {
  const auto& fs = g.val(feature).shape();
  Var s = linear(g, feature, m.planner_ids(iteration).score);  // [B, M, 1]
  return g.reshape(s, {fs[0], fs[1]});
}

PlanVars plan_step(Graph& g, const Model& m, Var ego_feature, Var bev_tokens, Var future_bev,
                   int iteration, FutureMode mode) {
  const auto& cfg = m.config();
  const PlannerIds& ids = m.planner_ids(iteration);
  const int64_t b = g.val(ego_feature).dim(0);
  const int64_t modes = cfg.modes;
  const int64_t c = cfg.channels;

  if (!cfg.decouple) {
    // Joint attention over current and future tokens (no branch separation).
    Var cur_mem = g.add_broadcast(g.expand(bev_tokens, 1, modes), g.param(ids.cur.mem_pos));
    Var fut_mem = g.add_broadcast(future_tokens(g, m, future_bev), g.param(ids.fut.mem_pos));
    Var mem = g.concat(cur_mem, fut_mem, 2);  // [B, M, 2HW, C]
    Var q = g.reshape(ego_feature, {b, modes, 1, c});
    Var out = cross_block(g, q, mem, ids.cur, cfg.heads, /*add_pos=*/false);
    out = g.reshape(out, {b, modes, c});
    Var traj = decode_traj(g, m, out, ids.head_final);
    return PlanVars{traj, traj, traj, mode_scores(g, m, out, iteration), out};
  }

  Var cur = attend_current(g, m, ego_feature, bev_tokens, iteration);
  Var logits = mode_scores(g, m, cur, iteration);
  Var traj_a = decode_traj(g, m, cur, ids.head_a);

  if (!cfg.future_bev) {
    // Future branch bypassed: normalize the current feature and decode.
    Var fused = g.layer_norm(cur, kLnEps);
    Var traj_final = decode_traj(g, m, fused, ids.head_final);
    return PlanVars{traj_a, traj_a, traj_final, logits, fused};
  }

  Var futf{-1};
  if (mode == FutureMode::Zeroed) {
    futf = g.input(Tensor::zeros({b, modes, c}));
  } else {
    Var finit = init_future_ego(g, m, b, iteration);
    futf = attend_future(g, m, finit, future_bev, iteration);
  }
  Var traj_b = decode_traj(g, m, futf, ids.head_b);

  Var fused{-1};
  switch (cfg.fusion) {
    case Fusion::Mln:
      fused = fuse_mln(g, m, cur, futf, iteration);
      break;
    case Fusion::Cat:
      fused = mlp(g, g.concat(cur, futf, 2), ids.fuse_cat);
      break;
    case Fusion::Add:
      fused = g.add(cur, futf);
      break;
  }
  Var traj_final = decode_traj(g, m, fused, ids.head_final);
  return PlanVars{traj_a, traj_b, traj_final, logits, fused};
}

}  // namespace seerdrive::model
