#include "seerdrive/model/encoders.hpp"

#include "seerdrive/model/blocks.hpp"

namespace seerdrive::model {

Tensor grid_one_hot(const scenario::SemanticGrid& g) {
  const int64_t r = g.size;
  const int64_t k = scenario::SemanticGrid::kClasses;
  Tensor out({r, r, k});
  for (int64_t i = 0; i < r * r; ++i) {
    out[i * k + g.labels[static_cast<size_t>(i)]] = 1.0;
  }
  return out;
}

Tensor ego_encoder_input(const anchors::AnchorSet& anchors, const scenario::EgoStatus& status) {
  const int64_t m = anchors.modes();
  const int64_t t2 = anchors.horizon() * 2;
  Tensor out({m, t2 + 7});
  for (int64_t i = 0; i < m; ++i) {
    double* row = out.data() + i * (t2 + 7);
    for (int64_t k = 0; k < t2; ++k) row[k] = anchors.anchors[i * t2 + k] * kCoordScale;
    row[t2 + 0] = status.velocity.x * kCoordScale;
    row[t2 + 1] = status.velocity.y * kCoordScale;
    row[t2 + 2] = status.acceleration.x * kCoordScale;
    row[t2 + 3] = status.acceleration.y * kCoordScale;
    row[t2 + 4] = status.command[0];
    row[t2 + 5] = status.command[1];
    row[t2 + 6] = status.command[2];
  }
  return out;
}

Var encode_bev_tokens(Graph& g, const Model& m, Var grid_onehot) {
  const auto& cfg = m.config();
  const auto& shape = g.val(grid_onehot).shape();
  if (shape.size() != 4 || shape[1] != cfg.grid_size || shape[2] != cfg.grid_size ||
      shape[3] != cfg.classes) {
    throw ShapeError("encode_bev: expected [B, R, R, K] one-hot grid");
  }
  const int64_t b = shape[0];
  const int64_t h = cfg.bev_hw();
  const int64_t p = cfg.patch;
  const int64_t k = cfg.classes;
  // [B, R, R, K] -> [B, H, p, W, p, K] -> [B, H, W, p, p, K] -> [B, HW, p*p*K]
  Var x = g.reshape(grid_onehot, {b, h, p, h, p, k});
  x = g.swap_axes(x, 2, 3);
  x = g.reshape(x, {b, h * h, p * p * k});
  return mlp(g, x, m.ids().obs_encoder);
}

Var encode_ego(Graph& g, const Model& m, Var ego_inputs) {
  return mlp(g, ego_inputs, m.ids().ego_encoder);
}

Var decode_bev_tokens(Graph& g, const Model& m, Var tokens) {
  const auto& cfg = m.config();
  const auto& shape = g.val(tokens).shape();
  const int64_t h = cfg.bev_hw();
  const int64_t p = cfg.patch;
  const int64_t k = cfg.classes;
  if (shape[shape.size() - 2] != h * h || shape.back() != cfg.channels) {
    throw ShapeError("decode_bev: expected [..., HW, C] tokens");
  }
  Var x = mlp(g, tokens, m.ids().bev_decoder);  // [..., HW, p*p*K]
  std::vector<int64_t> lead(shape.begin(), shape.end() - 2);
  const int nlead = static_cast<int>(lead.size());
  auto shp = lead;
  shp.insert(shp.end(), {h, h, p, p, k});
  x = g.reshape(x, shp);
  x = g.swap_axes(x, nlead + 1, nlead + 2);  // [.., H, p, W, p, K]
  auto out = lead;
  out.insert(out.end(), {h * p, h * p, k});
  return g.reshape(x, out);
}

}  // namespace seerdrive::model
