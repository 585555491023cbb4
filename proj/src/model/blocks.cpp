#include "seerdrive/model/blocks.hpp"

#include <cmath>

namespace seerdrive::model {

Var linear(Graph& g, Var x, const LinearIds& ids) {
  return g.add_broadcast(g.matmul(x, g.param(ids.w)), g.param(ids.b));
}

Var mlp(Graph& g, Var x, const MlpIds& ids) {
  return linear(g, g.gelu(linear(g, x, ids.l1)), ids.l2);
}

Var affine_ln(Graph& g, Var x, const LnIds& ids) {
  return g.scale_shift(g.layer_norm(x, kLnEps), g.param(ids.g), g.param(ids.b));
}

Var mha(Graph& g, Var q_in, Var kv_in, const MhaIds& ids, int heads) {
  const auto& qs = g.val(q_in).shape();
  const auto& ks = g.val(kv_in).shape();
  const int64_t c = qs.back();
  const int64_t tq = qs[qs.size() - 2];
  const int64_t tkv = ks[ks.size() - 2];
  const int64_t dh = c / heads;
  const int qdim = static_cast<int>(qs.size());

  std::vector<int64_t> lead(qs.begin(), qs.end() - 2);
  auto with_tail = [&lead](std::initializer_list<int64_t> tail) {
    std::vector<int64_t> s = lead;
    s.insert(s.end(), tail);
    return s;
  };

  // scaling q up front is cheaper than scaling the [Tq, Tkv] score map
  Var q = g.scale(linear(g, q_in, ids.q), 1.0 / std::sqrt(static_cast<double>(dh)));
  Var k = linear(g, kv_in, ids.k);
  Var v = linear(g, kv_in, ids.v);
  // [..., T, C] -> [..., T, h, dh] -> [..., h, T, dh]
  q = g.swap_axes(g.reshape(q, with_tail({tq, heads, dh})), qdim - 2, qdim - 1);
  k = g.swap_axes(g.reshape(k, with_tail({tkv, heads, dh})), qdim - 2, qdim - 1);
  v = g.swap_axes(g.reshape(v, with_tail({tkv, heads, dh})), qdim - 2, qdim - 1);

  Var attn = g.softmax(g.matmul_nt(q, k));
  Var ctx = g.matmul(attn, v);  // [..., h, Tq, dh]
  ctx = g.reshape(g.swap_axes(ctx, qdim - 2, qdim - 1), with_tail({tq, c}));
  return linear(g, ctx, ids.o);
}

Var encoder_layer(Graph& g, Var x, const EncLayerIds& ids, int heads) {
  Var n = affine_ln(g, x, ids.ln1);
  x = g.add(x, mha(g, n, n, ids.mha, heads));
  x = g.add(x, mlp(g, affine_ln(g, x, ids.ln2), ids.ffn));
  return x;
}

Var cross_block(Graph& g, Var q, Var mem_tokens, const CrossBlockIds& ids, int heads,
                bool add_pos) {
  Var mem = add_pos ? g.add_broadcast(mem_tokens, g.param(ids.mem_pos)) : mem_tokens;
  q = g.add(q, mha(g, affine_ln(g, q, ids.lnq), mem, ids.mha, heads));
  q = g.add(q, mlp(g, affine_ln(g, q, ids.ln2), ids.ffn));
  return q;
}

}  // namespace seerdrive::model
