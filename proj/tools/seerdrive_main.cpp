// seerdrive command-line interface: scenario generation, anchor fitting,
// training, evaluation, ablation sweeps, and figure rendering.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "seerdrive/anchors/anchors.hpp"
#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/serialize.hpp"
#include "seerdrive/eval/ablation.hpp"
#include "seerdrive/eval/evaluate.hpp"
#include "seerdrive/render/render.hpp"
#include "seerdrive/scenario/dataset.hpp"
#include "seerdrive/scenario/generate.hpp"
#include "seerdrive/train/trainer.hpp"

using namespace seerdrive;

namespace {

std::string cache_dir_default() {
  const char* env = std::getenv("SEERDRIVE_CACHE");
  return env ? std::string(env) : std::string(".seerdrive_cache");
}

int cmd_gen_data(int64_t seed, int64_t count, const std::string& out,
                 const std::string& config_path, bool dump) {
  scenario::GenConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read generator config: " + config_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    cfg = scenario::GenConfig::from_json_text(text);
  }
  cfg.validate();
  std::vector<scenario::Scenario> scenarios;
  scenarios.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    scenarios.push_back(scenario::generate_scenario(seed + i, cfg));
  }
  const auto manifest = scenario::write_dataset(scenarios, out, cfg.hash(), dump);
  std::cout << "wrote " << manifest.count << " scenarios to " << out << " (config hash "
            << manifest.config_hash << ")\n";
  return 0;
}

int cmd_fit_anchors(const std::string& dataset, int64_t modes, int64_t fit_seed, int iters,
                    const std::string& out) {
  const auto scenarios = scenario::read_dataset(dataset);
  const auto aset = anchors::fit_anchors(scenarios, modes, iters, static_cast<uint64_t>(fit_seed));
  anchors::save_anchors(aset, out);
  std::cout << "fit " << aset.modes() << " anchors over " << scenarios.size()
            << " futures (inertia " << aset.inertia << ") -> " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& dataset, const std::string& anchors_path,
              const std::string& out) {
  train::TrainConfig cfg;
  if (!config_path.empty()) cfg = train::TrainConfig::from_json_file(config_path);
  for (const auto& kv : overrides) cfg.apply_override(kv);

  const auto scenarios = scenario::read_dataset(dataset);
  const auto aset = anchors::load_anchors(anchors_path);

  std::ofstream losslog(out + ".losslog");
  train::TrainResult res = train::run_training(scenarios, aset, cfg, &losslog);
  model::save_checkpoint(*res.model, out, res.steps, res.final_loss);
  std::cout << "trained " << res.steps << " steps, final loss " << res.final_loss << " -> " << out
            << " (loss log " << out << ".losslog)\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& dataset, const std::string& report_path,
             bool strict, const std::string& expect_config) {
  std::optional<uint64_t> expected_hash;
  if (!expect_config.empty()) {
    expected_hash = train::TrainConfig::from_json_file(expect_config).model.hash();
  }
  model::LoadedCheckpoint lc = model::load_checkpoint(ckpt, strict, expected_hash);
  const auto scenarios = scenario::read_dataset(dataset);
  std::vector<eval::ScenarioResult> per;
  const eval::MetricsReport report = eval::evaluate(lc.model, scenarios, &per);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot write report: " + report_path);
    eval::write_report(out, report, per);
  }
  std::cout << eval::summary_line(report) << "\n";
  return 0;
}

int cmd_ablate(const std::string& dataset, const std::string& axes, int seeds, int test_count,
               const std::string& config_path, const std::vector<std::string>& overrides,
               int64_t anchor_modes, const std::string& out) {
  train::TrainConfig cfg;
  if (!config_path.empty()) cfg = train::TrainConfig::from_json_file(config_path);
  for (const auto& kv : overrides) cfg.apply_override(kv);
  if (anchor_modes > 0) cfg.model.modes = static_cast<int>(anchor_modes);
  eval::parse_axes(axes, cfg);  // reject unknown axes before any heavy work

  auto scenarios = scenario::read_dataset(dataset);
  if (static_cast<int>(scenarios.size()) <= test_count) {
    throw ConfigError("dataset too small for the requested test split");
  }
  std::vector<scenario::Scenario> test_split(scenarios.end() - test_count, scenarios.end());
  scenarios.resize(scenarios.size() - static_cast<size_t>(test_count));

  const auto aset = anchors::fit_anchors(scenarios, cfg.model.modes, 100, 1);
  const auto result = eval::run_ablation(scenarios, test_split, aset, cfg, axes, seeds,
                                         cache_dir_default(), &std::cerr);
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write table: " + out);
    os << result.table;
  }
  std::cout << result.table;
  return 0;
}

int cmd_render(const std::string& ckpt, const std::string& dataset, int64_t index,
               const std::string& panels, const std::string& out) {
  model::LoadedCheckpoint lc = model::load_checkpoint(ckpt);
  const auto scenarios = scenario::read_dataset(dataset);
  if (index < 0 || index >= static_cast<int64_t>(scenarios.size())) {
    throw InputError("render: scenario index " + std::to_string(index) + " out of range (" +
                     std::to_string(scenarios.size()) + " scenarios)");
  }
  render::RenderSpec spec;
  spec.index = index;
  spec.out_path = out;
  if (!panels.empty() && panels != "all") {
    spec.panel_current = panels.find("current") != std::string::npos;
    spec.panel_future = panels.find("future") != std::string::npos;
    spec.panel_traj = panels.find("traj") != std::string::npos;
    spec.panel_modes = panels.find("modes") != std::string::npos;
  }
  render::render_scenario(lc.model, scenarios[static_cast<size_t>(index)], spec);
  std::cout << "rendered scenario " << index << " -> " << out << " (+ " << out << ".json)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seerdrive: future-scene world modeling and trajectory planning on synthetic BEV scenarios"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scenario dataset");
  int64_t gen_seed = 0, gen_count = 8;
  std::string gen_out, gen_config;
  bool gen_dump = false;
  gen->add_option("--seed", gen_seed, "base seed (scenario i uses seed+i)");
  gen->add_option("--count", gen_count, "number of scenarios");
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--config", gen_config, "generator config json");
  gen->add_flag("--dump", gen_dump, "also write per-scenario text dumps");

  // fit-anchors
  auto* fit = app.add_subcommand("fit-anchors", "fit the trajectory anchor vocabulary");
  std::string fit_dataset, fit_out;
  int64_t fit_modes = 16, fit_seed = 0;
  int fit_iters = 100;
  fit->add_option("--dataset", fit_dataset, "dataset directory")->required();
  fit->add_option("--modes", fit_modes, "number of modes");
  fit->add_option("--seed", fit_seed, "fitting seed");
  fit->add_option("--iters", fit_iters, "max Lloyd iterations");
  fit->add_option("--out", fit_out, "output anchor file")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_config, tr_dataset, tr_anchors, tr_out;
  std::vector<std::string> tr_sets;
  tr->add_option("--config", tr_config, "train config json");
  tr->add_option("--set", tr_sets, "config override key=value (repeatable)");
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();
  tr->add_option("--anchors", tr_anchors, "anchor file")->required();
  tr->add_option("--out", tr_out, "output checkpoint")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_dataset, ev_report, ev_expect;
  bool ev_strict = false;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--dataset", ev_dataset, "dataset directory")->required();
  ev->add_option("--report", ev_report, "report output file");
  ev->add_option("--expect-config", ev_expect, "train config to hash-check against");
  ev->add_flag("--strict", ev_strict, "refuse on config hash mismatch");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare ablation variants");
  std::string ab_dataset, ab_axes, ab_config, ab_out;
  std::vector<std::string> ab_sets;
  int ab_seeds = 3, ab_test = 512;
  int64_t ab_modes = 0;
  ab->add_option("--dataset", ab_dataset, "dataset directory")->required();
  ab->add_option("--axes", ab_axes, "axis spec, e.g. future_bev:off;iterations:1");
  ab->add_option("--seeds", ab_seeds, "seeds per variant");
  ab->add_option("--test-count", ab_test, "scenarios held out for testing");
  ab->add_option("--config", ab_config, "base train config json");
  ab->add_option("--set", ab_sets, "config override key=value (repeatable)");
  ab->add_option("--modes", ab_modes, "anchor mode count override");
  ab->add_option("--out", ab_out, "table output file");

  // render
  auto* re = app.add_subcommand("render", "render a scenario with model outputs");
  std::string re_ckpt, re_dataset, re_panels = "all", re_out;
  int64_t re_index = 0;
  re->add_option("--ckpt", re_ckpt, "checkpoint file")->required();
  re->add_option("--dataset", re_dataset, "dataset directory")->required();
  re->add_option("--index", re_index, "scenario index");
  re->add_option("--panels", re_panels, "comma list: current,future,traj,modes (or 'all')");
  re->add_option("--out", re_out, "output image (.bmp)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(gen_seed, gen_count, gen_out, gen_config, gen_dump);
    if (*fit) return cmd_fit_anchors(fit_dataset, fit_modes, fit_seed, fit_iters, fit_out);
    if (*tr) return cmd_train(tr_config, tr_sets, tr_dataset, tr_anchors, tr_out);
    if (*ev) return cmd_eval(ev_ckpt, ev_dataset, ev_report, ev_strict, ev_expect);
    if (*ab) return cmd_ablate(ab_dataset, ab_axes, ab_seeds, ab_test, ab_config, ab_sets, ab_modes, ab_out);
    if (*re) return cmd_render(re_ckpt, re_dataset, re_index, re_panels, re_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
