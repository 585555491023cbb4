#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "seerdrive/eval/metrics.hpp"
#include "seerdrive/model/model.hpp"

namespace seerdrive::eval {

struct MetricsReport {
  L2Result l2;
  double ade = 0;
  double collision_rate = 0;
  PdmSubscores pdm;
  double pdms = 0;
  double miou = 0;
  int64_t n_scenarios = 0;
};

struct ScenarioResult {
  int64_t seed = 0;
  L2Result l2;
  double ade = 0;
  int collision = 0;
  PdmSubscores pdm;
  double pdms = 0;
  double miou = 0;
  std::vector<geom::Vec2> best_traj;
};

// Single-scenario forward at the model's configured iteration count; the
// reported trajectory is the highest-scoring mode of the final iteration.
ScenarioResult evaluate_scenario(const model::Model& m, const scenario::Scenario& s);

// Deterministic aggregation over the dataset (order-fixed reductions).
MetricsReport evaluate(const model::Model& m, const std::vector<scenario::Scenario>& dataset,
                       std::vector<ScenarioResult>* per_scenario = nullptr);

// Structured text: one record line per scenario plus a summary block.
void write_report(std::ostream& os, const MetricsReport& report,
                  const std::vector<ScenarioResult>& per_scenario);

std::string summary_line(const MetricsReport& r);

}  // namespace seerdrive::eval
