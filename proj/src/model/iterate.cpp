#include "seerdrive/model/iterate.hpp"

#include "seerdrive/core/errors.hpp"

namespace seerdrive::model {

IterationTrace run_iterations(Graph& g, const Model& m, Var bev_tokens, Var ego_feature0,
                              int n_iterations, MapDecode decode_maps, FutureMode future_mode) {
  if (n_iterations < 1) throw ConfigError("iterations must be >= 1");
  if (m.config().per_iteration_weights && n_iterations > m.config().iterations) {
    throw ConfigError("per-iteration weights were built for fewer iterations");
  }
  IterationTrace trace;
  Var ego = ego_feature0;
  for (int i = 0; i < n_iterations; ++i) {
    Var scene = assemble_scene(g, m, bev_tokens, ego);
    FuturePrediction pred = predict_future(g, m, scene, i);
    IterationStep step;
    step.future_bev = pred.future_bev;
    if (decode_maps == MapDecode::All) {
      step.future_map_logits = decode_future_map(g, m, pred.future_bev);
    }
    step.plan = plan_step(g, m, ego, bev_tokens, pred.future_bev, i, future_mode);
    ego = step.plan.fused_ego;
    trace.steps.push_back(step);
  }
  return trace;
}

}  // namespace seerdrive::model
