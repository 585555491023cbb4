#include "seerdrive/train/losses.hpp"

#include <cmath>

#include "seerdrive/core/kernels.hpp"
#include "seerdrive/model/encoders.hpp"

namespace seerdrive::train {

double ade(const double* traj, const double* gt, int64_t horizon) {
  double acc = 0.0;
  for (int64_t k = 0; k < horizon; ++k) {
    acc += std::hypot(traj[2 * k] - gt[2 * k], traj[2 * k + 1] - gt[2 * k + 1]);
  }
  return acc / static_cast<double>(horizon);
}

int64_t select_winner(const Tensor& traj_final, const Tensor& gt) {
  const int64_t m = traj_final.dim(0);
  const int64_t t = traj_final.dim(1);
  int64_t best = 0;
  double best_ade = ade(traj_final.data(), gt.data(), t);
  for (int64_t i = 1; i < m; ++i) {
    const double a = ade(traj_final.data() + i * t * 2, gt.data(), t);
    if (a < best_ade) {
      best_ade = a;
      best = i;
    }
  }
  return best;
}

int64_t select_winner_by_score(const Tensor& mode_logits) {
  int64_t best = 0;
  for (int64_t i = 1; i < mode_logits.numel(); ++i) {
    if (mode_logits[i] > mode_logits[best]) best = i;
  }
  return best;
}

std::vector<int> grid_labels_int(const scenario::SemanticGrid& g) {
  std::vector<int> out(g.labels.size());
  for (size_t i = 0; i < g.labels.size(); ++i) out[i] = g.labels[i];
  return out;
}

double map_loss(const Tensor& logits, const scenario::SemanticGrid& target) {
  const int64_t k = logits.dim(logits.ndim() - 1);
  const int64_t rows = logits.numel() / k;
  if (rows != static_cast<int64_t>(target.labels.size())) {
    throw ShapeError("map_loss: logits/target cell count mismatch");
  }
  const auto labels = grid_labels_int(target);
  std::vector<double> probs(static_cast<size_t>(rows * k));
  return kernels::ce_mean(logits.data(), labels.data(), probs.data(), rows, k);
}

TrajLossParts traj_loss(const PlanTensors& plan, const Tensor& gt, int64_t winner) {
  const int64_t t = plan.traj_final.dim(1);
  const int64_t n = t * 2;
  TrajLossParts parts;
  parts.reg_a = kernels::l1_mean(plan.traj_a.data() + winner * n, gt.data(), n);
  parts.reg_b = kernels::l1_mean(plan.traj_b.data() + winner * n, gt.data(), n);
  parts.reg_final = kernels::l1_mean(plan.traj_final.data() + winner * n, gt.data(), n);
  const int64_t m = plan.mode_logits.numel();
  std::vector<double> probs(static_cast<size_t>(m));
  const int label = static_cast<int>(winner);
  parts.cls = kernels::ce_mean(plan.mode_logits.data(), &label, probs.data(), 1, m);
  return parts;
}

double LossBreakdown::formula_total() const {
  double fut_sum = 0;
  for (double v : map_fut) fut_sum += v;
  double traj_sum = 0;
  for (size_t i = 0; i < traj_final.size(); ++i) {
    if (use_a) traj_sum += traj_a[i];
    if (use_b) traj_sum += traj_b[i];
    traj_sum += traj_final[i] + cls[i];
  }
  return lambdas.l1 * map_curr + lambdas.l2 * fut_sum + lambdas.l3 * traj_sum;
}

LossBreakdown total_loss(const TraceTensors& trace, const scenario::SemanticGrid& curr_target,
                         const scenario::SemanticGrid& fut_target, const Tensor& gt,
                         model::WinnerRule rule, const Lambdas& lambdas, bool use_a, bool use_b) {
  LossBreakdown out;
  out.lambdas = lambdas;
  out.use_a = use_a;
  out.use_b = use_b;
  out.map_curr = map_loss(trace.curr_map_logits, curr_target);
  const size_t n_iters = trace.plans.size();
  if (trace.fut_map_logits.size() != n_iters) {
    throw ShapeError("total_loss: trace arity mismatch");
  }
  const int64_t cells = static_cast<int64_t>(fut_target.labels.size());
  const int64_t k = scenario::SemanticGrid::kClasses;
  for (size_t i = 0; i < n_iters; ++i) {
    const PlanTensors& plan = trace.plans[i];
    const int64_t winner = rule == model::WinnerRule::MinAde
                               ? select_winner(plan.traj_final, gt)
                               : select_winner_by_score(plan.mode_logits);
    const TrajLossParts parts = traj_loss(plan, gt, winner);
    out.traj_a.push_back(parts.reg_a);
    out.traj_b.push_back(parts.reg_b);
    out.traj_final.push_back(parts.reg_final);
    out.cls.push_back(parts.cls);

    const Tensor& fut = trace.fut_map_logits[i];  // [M, R, R, K]
    Tensor winner_logits({fut.dim(1), fut.dim(2), fut.dim(3)},
                         std::vector<double>(fut.data() + winner * cells * k,
                                             fut.data() + (winner + 1) * cells * k));
    out.map_fut.push_back(map_loss(winner_logits, fut_target));
  }
  out.total = out.formula_total();
  return out;
}

LossVars build_loss(Graph& g, const model::Model& m, Var curr_map_logits,
                    const model::IterationTrace& trace, const BatchTargets& targets,
                    const Lambdas& lambdas) {
  const auto& cfg = m.config();
  const int64_t b = static_cast<int64_t>(targets.curr.size());
  const int64_t horizon = cfg.horizon;
  const bool use_a = cfg.decouple;
  const bool use_b = cfg.decouple && cfg.future_bev;

  LossVars out;
  out.values.lambdas = lambdas;
  out.values.use_a = use_a;
  out.values.use_b = use_b;

  // current map loss over all batch cells
  std::vector<int> curr_labels;
  for (const auto* grid : targets.curr) {
    const auto l = grid_labels_int(*grid);
    curr_labels.insert(curr_labels.end(), l.begin(), l.end());
  }
  Var map_curr = g.cross_entropy_mean(curr_map_logits, std::move(curr_labels));
  out.values.map_curr = g.val(map_curr)[0];

  std::vector<int> fut_labels;
  for (const auto* grid : targets.fut) {
    const auto l = grid_labels_int(*grid);
    fut_labels.insert(fut_labels.end(), l.begin(), l.end());
  }

  Var total = g.scale(map_curr, lambdas.l1);
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const model::PlanVars& plan = trace.steps[i].plan;
    const Tensor& final_vals = g.val(plan.traj_final);  // [B, M, T, 2]
    const Tensor& logit_vals = g.val(plan.mode_logits);

    std::vector<int64_t> winners(static_cast<size_t>(b));
    std::vector<int> winner_labels(static_cast<size_t>(b));
    for (int64_t bi = 0; bi < b; ++bi) {
      if (cfg.winner == model::WinnerRule::MinAde) {
        int64_t best = 0;
        double best_ade = 1e300;
        for (int64_t mo = 0; mo < cfg.modes; ++mo) {
          const double a = ade(final_vals.data() + (bi * cfg.modes + mo) * horizon * 2,
                               targets.gt.data() + bi * horizon * 2, horizon);
          if (a < best_ade) {
            best_ade = a;
            best = mo;
          }
        }
        winners[static_cast<size_t>(bi)] = best;
      } else {
        int64_t best = 0;
        for (int64_t mo = 1; mo < cfg.modes; ++mo) {
          if (logit_vals[bi * cfg.modes + mo] > logit_vals[bi * cfg.modes + best]) best = mo;
        }
        winners[static_cast<size_t>(bi)] = best;
      }
      winner_labels[static_cast<size_t>(bi)] = static_cast<int>(winners[static_cast<size_t>(bi)]);
    }
    out.winners.push_back(winners);

    Tensor gt_copy = targets.gt;  // [B, T, 2]
    auto reg_term = [&](Var traj) {
      Var sel = g.gather_mode(traj, winners);  // [B, T, 2]
      return g.l1_mean(sel, gt_copy);
    };
    Var reg_a = reg_term(plan.traj_a);
    Var reg_b = reg_term(plan.traj_b);
    Var reg_final = reg_term(plan.traj_final);
    Var cls = g.cross_entropy_mean(plan.mode_logits, winner_labels);

    // winner-mode future map decode
    Var fut_sel = g.gather_mode(trace.steps[i].future_bev, winners);  // [B, H, W, C]
    Var fut_tokens = g.reshape(fut_sel, {b, static_cast<int64_t>(cfg.tokens()), cfg.channels});
    Var fut_logits = model::decode_bev_tokens(g, m, fut_tokens);      // [B, R, R, K]
    Var map_fut = g.cross_entropy_mean(fut_logits, fut_labels);

    out.values.traj_a.push_back(g.val(reg_a)[0]);
    out.values.traj_b.push_back(g.val(reg_b)[0]);
    out.values.traj_final.push_back(g.val(reg_final)[0]);
    out.values.cls.push_back(g.val(cls)[0]);
    out.values.map_fut.push_back(g.val(map_fut)[0]);

    Var bracket = g.add(reg_final, cls);
    if (use_a) bracket = g.add(bracket, reg_a);
    if (use_b) bracket = g.add(bracket, reg_b);
    total = g.add(total, g.add(g.scale(map_fut, lambdas.l2), g.scale(bracket, lambdas.l3)));
  }

  out.total = total;
  out.values.total = g.val(total)[0];
  return out;
}

}  // namespace seerdrive::train
