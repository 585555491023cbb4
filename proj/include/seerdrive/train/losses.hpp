#pragma once

#include <vector>

#include "seerdrive/model/iterate.hpp"
#include "seerdrive/scenario/types.hpp"

namespace seerdrive::train {

// ---- tensor-level losses (also exercised directly by tests) ----

struct PlanTensors {
  Tensor traj_a, traj_b, traj_final;  // [M, T, 2]
  Tensor mode_logits;                 // [M]
};

double ade(const double* traj, const double* gt, int64_t horizon);

// Winner-takes-all selection: argmin mean displacement of traj_final vs the
// ground truth; ties break to the lowest index.
int64_t select_winner(const Tensor& traj_final, const Tensor& gt);
// Alternative literal reading: the highest-scoring mode wins.
int64_t select_winner_by_score(const Tensor& mode_logits);

// Mean per-cell cross entropy of [R, R, K] logits against grid labels.
double map_loss(const Tensor& logits, const scenario::SemanticGrid& target);

struct TrajLossParts {
  double reg_a = 0, reg_b = 0, reg_final = 0, cls = 0;
};
// L1 regression on the winner mode plus mode-classification cross entropy.
TrajLossParts traj_loss(const PlanTensors& plan, const Tensor& gt, int64_t winner);

struct Lambdas {
  double l1 = 10.0, l2 = 0.1, l3 = 1.0;
};

struct LossBreakdown {
  double map_curr = 0;
  std::vector<double> map_fut;      // per iteration
  std::vector<double> traj_a, traj_b, traj_final, cls;
  Lambdas lambdas;
  double total = 0;
  // Which trajectory terms participate (ablation variants drop some).
  bool use_a = true, use_b = true;

  double formula_total() const;
};

struct TraceTensors {
  Tensor curr_map_logits;              // [R, R, K]
  std::vector<Tensor> fut_map_logits;  // per iteration, [M, R, R, K]
  std::vector<PlanTensors> plans;
};

LossBreakdown total_loss(const TraceTensors& trace, const scenario::SemanticGrid& curr_target,
                         const scenario::SemanticGrid& fut_target, const Tensor& gt,
                         model::WinnerRule rule, const Lambdas& lambdas, bool use_a = true,
                         bool use_b = true);

// ---- graph-level loss for training ----

struct BatchTargets {
  std::vector<const scenario::SemanticGrid*> curr;  // per batch item, t = 0
  std::vector<const scenario::SemanticGrid*> fut;   // per batch item, t = horizon
  Tensor gt;                                        // [B, T, 2]
};

struct LossVars {
  Var total;
  LossBreakdown values;
  std::vector<std::vector<int64_t>> winners;  // [iteration][batch item]
};

// Builds the training loss over a forward trace. Future maps are decoded for
// the winner mode only (the only slice the loss touches).
LossVars build_loss(Graph& g, const model::Model& m, Var curr_map_logits,
                    const model::IterationTrace& trace, const BatchTargets& targets,
                    const Lambdas& lambdas);

std::vector<int> grid_labels_int(const scenario::SemanticGrid& g);

}  // namespace seerdrive::train
