#include "seerdrive/eval/evaluate.hpp"

#include <cmath>
#include <sstream>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/model/encoders.hpp"
#include "seerdrive/model/iterate.hpp"
#include "seerdrive/scenario/rasterize.hpp"

namespace seerdrive::eval {

ScenarioResult evaluate_scenario(const model::Model& m, const scenario::Scenario& s) {
  const auto& cfg = m.config();
  const scenario::GridSpec spec{cfg.grid_size, cfg.cell_meters};
  const auto curr = scenario::rasterize(s, 0.0, spec);
  const auto fut = scenario::rasterize(s, scenario::kHorizonSeconds, spec);

  // ParamStore is not mutated by forwards; graphs need a non-const pointer.
  ParamStore& ps = const_cast<model::Model&>(m).params();
  Graph g(&ps);
  Tensor onehot = model::grid_one_hot(curr);
  Var grid = g.input(Tensor({1, cfg.grid_size, cfg.grid_size, cfg.classes},
                            std::vector<double>(onehot.data(), onehot.data() + onehot.numel())));
  Tensor ego_raw = model::ego_encoder_input(m.anchor_set(), s.ego_status);
  Var ego_in = g.input(Tensor({1, ego_raw.dim(0), ego_raw.dim(1)},
                              std::vector<double>(ego_raw.data(), ego_raw.data() + ego_raw.numel())));
  Var bev = model::encode_bev_tokens(g, m, grid);
  Var ego0 = model::encode_ego(g, m, ego_in);
  const auto trace =
      model::run_iterations(g, m, bev, ego0, cfg.iterations, model::MapDecode::All);
  const auto& last = trace.steps.back();

  const Tensor& logits = g.val(last.plan.mode_logits);  // [1, M]
  int64_t best = 0;
  for (int64_t mo = 1; mo < cfg.modes; ++mo) {
    if (logits[mo] > logits[best]) best = mo;
  }

  ScenarioResult r;
  r.seed = s.seed;
  const Tensor& traj = g.val(last.plan.traj_final);  // [1, M, T, 2]
  for (int k = 0; k < cfg.horizon; ++k) {
    r.best_traj.push_back({traj[(best * cfg.horizon + k) * 2], traj[(best * cfg.horizon + k) * 2 + 1]});
  }
  const std::vector<geom::Vec2> gt(s.ego_future.begin(), s.ego_future.end());
  r.l2 = l2_error(r.best_traj, gt);
  r.ade = ade(r.best_traj, gt);
  r.collision = collision_flag(r.best_traj, s);
  r.pdm = pdm_subscores(r.best_traj, s);
  r.pdms = pdm_aggregate(r.pdm);

  // predicted future map of the selected mode
  const Tensor& fmap = g.val(last.future_map_logits);  // [1, M, R, R, K]
  const int64_t cells = static_cast<int64_t>(cfg.grid_size) * cfg.grid_size;
  std::vector<uint8_t> pred_labels(static_cast<size_t>(cells));
  for (int64_t ci = 0; ci < cells; ++ci) {
    const double* row = fmap.data() + (best * cells + ci) * cfg.classes;
    int argmax = 0;
    for (int c = 1; c < cfg.classes; ++c) {
      if (row[c] > row[argmax]) argmax = c;
    }
    pred_labels[static_cast<size_t>(ci)] = static_cast<uint8_t>(argmax);
  }
  r.miou = miou(pred_labels, fut);
  return r;
}

MetricsReport evaluate(const model::Model& m, const std::vector<scenario::Scenario>& dataset,
                       std::vector<ScenarioResult>* per_scenario) {
  if (dataset.empty()) throw InputError("evaluate: empty dataset");
  MetricsReport rep;
  rep.pdm = PdmSubscores{0, 0, 0, 0, 0};
  for (const auto& s : dataset) {
    ScenarioResult r = evaluate_scenario(m, s);
    rep.l2.at_1s += r.l2.at_1s;
    rep.l2.at_2s += r.l2.at_2s;
    rep.l2.at_3s += r.l2.at_3s;
    rep.l2.at_4s += r.l2.at_4s;
    rep.l2.avg += r.l2.avg;
    rep.ade += r.ade;
    rep.collision_rate += r.collision;
    rep.pdm.nc += r.pdm.nc;
    rep.pdm.dac += r.pdm.dac;
    rep.pdm.ttc += r.pdm.ttc;
    rep.pdm.ep += r.pdm.ep;
    rep.pdm.comf += r.pdm.comf;
    rep.pdms += r.pdms;
    rep.miou += r.miou;
    if (per_scenario) per_scenario->push_back(std::move(r));
  }
  const double n = static_cast<double>(dataset.size());
  rep.l2.at_1s /= n;
  rep.l2.at_2s /= n;
  rep.l2.at_3s /= n;
  rep.l2.at_4s /= n;
  rep.l2.avg /= n;
  rep.ade /= n;
  rep.collision_rate /= n;
  rep.pdm.nc /= n;
  rep.pdm.dac /= n;
  rep.pdm.ttc /= n;
  rep.pdm.ep /= n;
  rep.pdm.comf /= n;
  rep.pdms /= n;
  rep.miou /= n;
  rep.n_scenarios = static_cast<int64_t>(dataset.size());
  // sub-score means must stay in [0,1]; the aggregate column reports the mean
  // of per-scenario aggregates, not the aggregate of means
  return rep;
}

std::string summary_line(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "summary n " << r.n_scenarios << " l2_1s " << r.l2.at_1s << " l2_2s " << r.l2.at_2s
     << " l2_3s " << r.l2.at_3s << " l2_4s " << r.l2.at_4s << " l2_avg " << r.l2.avg << " ade "
     << r.ade << " collision_rate " << r.collision_rate << " nc " << r.pdm.nc << " dac "
     << r.pdm.dac << " ttc " << r.pdm.ttc << " ep " << r.pdm.ep << " comf " << r.pdm.comf
     << " pdms " << r.pdms << " miou " << r.miou;
  return os.str();
}

void write_report(std::ostream& os, const MetricsReport& report,
                  const std::vector<ScenarioResult>& per_scenario) {
  os.precision(6);
  for (const auto& r : per_scenario) {
    os << "scenario seed " << r.seed << " l2_avg " << r.l2.avg << " ade " << r.ade
       << " collision " << r.collision << " nc " << r.pdm.nc << " dac " << r.pdm.dac << " ttc "
       << r.pdm.ttc << " ep " << r.pdm.ep << " comf " << r.pdm.comf << " pdms " << r.pdms
       << " miou " << r.miou << "\n";
  }
  os << summary_line(report) << "\n";
}

}  // namespace seerdrive::eval
