#pragma once

#include "seerdrive/core/graph.hpp"
#include "seerdrive/model/model.hpp"

namespace seerdrive::model {

Var linear(Graph& g, Var x, const LinearIds& ids);
Var mlp(Graph& g, Var x, const MlpIds& ids);  // linear-gelu-linear
Var affine_ln(Graph& g, Var x, const LnIds& ids);

// Multi-head attention. q: [..., Tq, C]; kv: [..., Tkv, C] with identical
// leading dims. Queries never mix; each attends over the kv tokens.
Var mha(Graph& g, Var q_in, Var kv_in, const MhaIds& ids, int heads);

// Pre-norm encoder layer (self attention within the token axis).
Var encoder_layer(Graph& g, Var x, const EncLayerIds& ids, int heads);

// Pre-norm cross-attention block: queries attend to memory tokens (which get
// the block's positional embedding unless add_pos is false), then a
// feed-forward refinement.
Var cross_block(Graph& g, Var q, Var mem_tokens, const CrossBlockIds& ids, int heads,
                bool add_pos = true);

}  // namespace seerdrive::model
