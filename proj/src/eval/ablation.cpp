#include "seerdrive/eval/ablation.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "seerdrive/core/errors.hpp"

namespace seerdrive::eval {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

train::TrainConfig apply_axis(const train::TrainConfig& base, const std::string& axis,
                              const std::string& value) {
  train::TrainConfig cfg = base;
  if (axis == "future_bev") {
    if (value != "off") throw ConfigError("future_bev axis supports only 'off'");
    cfg.model.future_bev = false;
  } else if (axis == "decouple") {
    if (value != "off") throw ConfigError("decouple axis supports only 'off'");
    cfg.model.decouple = false;
  } else if (axis == "iterations") {
    cfg.model.iterations = std::stoi(value);
    cfg.model.validate();
  } else if (axis == "fusion") {
    cfg.model.fusion = model::fusion_from_string(value);
  } else if (axis == "future_init") {
    // "random" is the randomly initialized learned-query variant
    cfg.model.future_init =
        value == "random" ? model::FutureInit::Learned : model::future_init_from_string(value);
  } else if (axis == "winner") {
    cfg.model.winner = model::winner_from_string(value);
  } else if (axis == "per_iteration_weights") {
    if (value != "on") throw ConfigError("per_iteration_weights axis supports only 'on'");
    cfg.model.per_iteration_weights = true;
  } else if (axis == "mode_mix_attention") {
    if (value != "on") throw ConfigError("mode_mix_attention axis supports only 'on'");
    cfg.model.mode_mix_attention = true;
  } else {
    throw ConfigError("unknown ablation axis: " + axis);
  }
  return cfg;
}

}  // namespace

std::vector<AblationVariant> parse_axes(const std::string& axes, const train::TrainConfig& base) {
  std::vector<AblationVariant> variants;
  variants.push_back({"base", base});
  for (const std::string& spec : split(axes, ';')) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("axis must be name:values — " + spec);
    const std::string axis = spec.substr(0, colon);
    for (const std::string& value : split(spec.substr(colon + 1), ',')) {
      variants.push_back({axis + "=" + value, apply_axis(base, axis, value)});
    }
  }
  return variants;
}

AblationResult run_ablation(const std::vector<scenario::Scenario>& train_split,
                            const std::vector<scenario::Scenario>& test_split,
                            const anchors::AnchorSet& anchor_set,
                            const train::TrainConfig& base, const std::string& axes, int n_seeds,
                            const std::string& cache_dir, std::ostream* progress) {
  const auto variants = parse_axes(axes, base);
  if (n_seeds < 1) throw ConfigError("ablation needs n_seeds >= 1");
  if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);

  AblationResult out;
  for (const auto& variant : variants) {
    for (int si = 0; si < n_seeds; ++si) {
      train::TrainConfig cfg = variant.cfg;
      cfg.seed = base.seed + static_cast<uint64_t>(si);
      if (progress) {
        *progress << "ablate: training variant '" << variant.name << "' seed " << cfg.seed
                  << "\n" << std::flush;
      }
      train::TrainResult res = train::run_training(train_split, anchor_set, cfg);
      if (!cache_dir.empty()) {
        std::string fname = variant.name;
        for (char& c : fname) {
          if (c == '=' || c == ':' || c == '/') c = '_';
        }
        model::save_checkpoint(*res.model, cache_dir + "/" + fname + "_seed" +
                                               std::to_string(cfg.seed) + ".ckpt",
                               res.steps, res.final_loss);
      }
      AblationRow row;
      row.variant = variant.name;
      row.seed = cfg.seed;
      row.report = evaluate(*res.model, test_split);
      out.rows.push_back(std::move(row));
    }
  }

  // table: one row per (variant, seed), then mean±sd and delta-vs-base rows
  std::ostringstream table;
  table.precision(6);
  table << "variant\tseed\tade\tl2_avg\tcollision_rate\tpdms\tmiou\n";
  std::map<std::string, std::vector<const AblationRow*>> by_variant;
  for (const auto& row : out.rows) {
    table << row.variant << "\t" << row.seed << "\t" << row.report.ade << "\t" << row.report.l2.avg
          << "\t" << row.report.collision_rate << "\t" << row.report.pdms << "\t"
          << row.report.miou << "\n";
    by_variant[row.variant].push_back(&row);
  }
  auto mean_sd = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>{mean, sd};
  };
  std::map<std::string, double> mean_ade;
  for (const auto& variant : variants) {
    const auto& rows = by_variant[variant.name];
    std::vector<double> ades, pdms;
    for (const auto* r : rows) {
      ades.push_back(r->report.ade);
      pdms.push_back(r->report.pdms);
    }
    const auto [am, asd] = mean_sd(ades);
    const auto [pm, psd] = mean_sd(pdms);
    mean_ade[variant.name] = am;
    table << variant.name << "\tmean±sd\t" << am << "±" << asd << "\t\t\t" << pm << "±" << psd
          << "\t\n";
  }
  for (const auto& variant : variants) {
    if (variant.name == "base") continue;
    table << variant.name << "\tdelta_ade_vs_base\t" << (mean_ade[variant.name] - mean_ade["base"])
          << "\t\t\t\t\n";
  }
  out.table = table.str();
  return out;
}

}  // namespace seerdrive::eval
