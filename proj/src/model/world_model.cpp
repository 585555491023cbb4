#include "seerdrive/model/world_model.hpp"

#include "seerdrive/model/blocks.hpp"
#include "seerdrive/model/encoders.hpp"

namespace seerdrive::model {

Var assemble_scene(Graph& g, const Model& m, Var bev_tokens, Var ego_feature) {
  const auto& bs = g.val(bev_tokens).shape();
  const auto& es = g.val(ego_feature).shape();
  if (bs.size() != 3 || es.size() != 3 || bs[0] != es[0] || bs[2] != es[2]) {
    throw ShapeError("assemble_scene: bev " + g.val(bev_tokens).shape_str() + " vs ego " +
                     g.val(ego_feature).shape_str());
  }
  const int64_t b = bs[0];
  const int64_t modes = es[1];
  const int64_t c = bs[2];
  Var rep = g.expand(bev_tokens, 1, modes);             // [B, M, HW, C]
  Var ego = g.reshape(ego_feature, {b, modes, 1, c});   // [B, M, 1, C]
  return g.concat(rep, ego, 2);
}

FuturePrediction predict_future(Graph& g, const Model& m, Var scene, int iteration) {
  const auto& cfg = m.config();
  const WorldModelIds& ids = m.world_ids(iteration);
  const auto& shape = g.val(scene).shape();
  const int64_t b = shape[0];
  const int64_t modes = shape[1];
  const int64_t tokens = shape[2];
  const int64_t c = shape[3];
  if (tokens != cfg.tokens() + 1 || c != cfg.channels) {
    throw ShapeError("predict_future: expected [B, M, HW+1, C], got " + g.val(scene).shape_str());
  }

  Var x = g.add_broadcast(scene, g.param(ids.pos));
  if (cfg.mode_mix_attention) x = g.reshape(x, {b, modes * tokens, c});
  for (const auto& layer : ids.layers) x = encoder_layer(g, x, layer, cfg.heads);
  if (cfg.mode_mix_attention) x = g.reshape(x, {b, modes, tokens, c});
  x = affine_ln(g, x, ids.ln_final);

  const int64_t hw = cfg.bev_hw();
  Var fut = g.slice(x, 2, 0, tokens - 1);
  fut = g.reshape(fut, {b, modes, hw, hw, c});
  return FuturePrediction{x, fut};
}

Var decode_future_map(Graph& g, const Model& m, Var future_bev) {
  const auto& cfg = m.config();
  const auto& shape = g.val(future_bev).shape();
  const int64_t b = shape[0];
  const int64_t modes = shape[1];
  Var tokens = g.reshape(future_bev, {b, modes, static_cast<int64_t>(cfg.tokens()), cfg.channels});
  return decode_bev_tokens(g, m, tokens);
}

}  // namespace seerdrive::model
