#include "seerdrive/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/rng.hpp"
#include "seerdrive/core/serialize.hpp"
#include "seerdrive/model/encoders.hpp"
#include "seerdrive/scenario/rasterize.hpp"

namespace seerdrive::train {

std::string TrainConfig::canonical_json() const {
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(model.canonical_json());
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["clip_norm"] = clip_norm;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["lambda1"] = lambdas.l1;
  j["lambda2"] = lambdas.l2;
  j["lambda3"] = lambdas.l3;
  return j.dump();
}

uint64_t TrainConfig::hash() const { return io::fnv1a(canonical_json()); }

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config json: ") + e.what());
  }
  TrainConfig c;
  if (j.contains("model")) c.model = model::ModelConfig::from_json_text(j["model"].dump());
  auto get = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j[k].get<std::decay_t<decltype(dst)>>();
  };
  get("lr", c.lr);
  get("weight_decay", c.weight_decay);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_eps", c.adam_eps);
  get("clip_norm", c.clip_norm);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("seed", c.seed);
  get("lambda1", c.lambdas.l1);
  get("lambda2", c.lambdas.l2);
  get("lambda3", c.lambdas.l3);
  if (c.lr <= 0) throw ConfigError("lr must be > 0");
  if (c.epochs < 1 || c.batch_size < 1) throw ConfigError("epochs/batch_size must be >= 1");
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void TrainConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  if (key == "lr") lr = std::stod(value);
  else if (key == "weight_decay") weight_decay = std::stod(value);
  else if (key == "beta1") beta1 = std::stod(value);
  else if (key == "beta2") beta2 = std::stod(value);
  else if (key == "adam_eps") adam_eps = std::stod(value);
  else if (key == "clip_norm") clip_norm = std::stod(value);
  else if (key == "epochs") epochs = std::stoi(value);
  else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "lambda1") lambdas.l1 = std::stod(value);
  else if (key == "lambda2") lambdas.l2 = std::stod(value);
  else if (key == "lambda3") lambdas.l3 = std::stod(value);
  else model.apply_override(kv);  // fall through to model keys
  if (lr <= 0) throw ConfigError("lr must be > 0");
}

namespace {

struct PreparedScenario {
  scenario::SemanticGrid curr;
  scenario::SemanticGrid fut;
  Tensor ego_inputs;  // [M, 2T+7]
  Tensor gt;          // [T, 2]
};

PreparedScenario prepare(const scenario::Scenario& s, const model::Model& m) {
  const auto& cfg = m.config();
  const scenario::GridSpec spec{cfg.grid_size, cfg.cell_meters};
  PreparedScenario p;
  p.curr = scenario::rasterize(s, 0.0, spec);
  p.fut = scenario::rasterize(s, scenario::kHorizonSeconds, spec);
  p.ego_inputs = model::ego_encoder_input(m.anchor_set(), s.ego_status);
  p.gt = Tensor({cfg.horizon, 2});
  for (int k = 0; k < cfg.horizon; ++k) {
    p.gt[k * 2] = s.ego_future[static_cast<size_t>(k)].x;
    p.gt[k * 2 + 1] = s.ego_future[static_cast<size_t>(k)].y;
  }
  return p;
}

struct AdamState {
  std::vector<Tensor> m1, m2;
  uint64_t t = 0;
};

void adam_step(ParamStore& ps, AdamState& st, const TrainConfig& cfg) {
  // global-norm clip first
  double norm2 = 0.0;
  for (int i = 0; i < ps.count(); ++i) {
    if (!ps.has_grad(i)) continue;
    const Tensor& gr = ps.grad(i);
    for (int64_t k = 0; k < gr.numel(); ++k) norm2 += gr[k] * gr[k];
  }
  const double norm = std::sqrt(norm2);
  const double scale = (cfg.clip_norm > 0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  st.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (int i = 0; i < ps.count(); ++i) {
    Tensor& v = ps.value(i);
    Tensor& gr = ps.grad(i);
    Tensor& m1 = st.m1[static_cast<size_t>(i)];
    Tensor& m2 = st.m2[static_cast<size_t>(i)];
    for (int64_t k = 0; k < v.numel(); ++k) {
      const double grad = gr[k] * scale;
      m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * grad;
      m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * grad * grad;
      const double mhat = m1[k] / bc1;
      const double vhat = m2[k] / bc2;
      double x = v[k];
      x -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) + cfg.weight_decay * x);
      v[k] = snap_to_f32(x);
    }
  }
}

void check_finite(const LossBreakdown& b, uint64_t step) {
  auto bad = [&](double v, const std::string& name) {
    if (!std::isfinite(v)) {
      throw DivergenceError(name + " non-finite at step " + std::to_string(step));
    }
  };
  bad(b.map_curr, "map_curr");
  for (size_t i = 0; i < b.map_fut.size(); ++i) {
    const std::string suffix = "(" + std::to_string(i + 1) + ")";
    bad(b.map_fut[i], "map_fut" + suffix);
    bad(b.traj_a[i], "traj_a" + suffix);
    bad(b.traj_b[i], "traj_b" + suffix);
    bad(b.traj_final[i], "traj_final" + suffix);
    bad(b.cls[i], "cls" + suffix);
  }
  bad(b.total, "total");
}

void log_step(std::ostream& os, uint64_t step, const LossBreakdown& b) {
  auto sum = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  };
  os << "step " << step << " map_curr " << b.map_curr << " map_fut " << sum(b.map_fut)
     << " traj_a " << sum(b.traj_a) << " traj_b " << sum(b.traj_b) << " traj_final "
     << sum(b.traj_final) << " cls " << sum(b.cls) << " total " << b.total << "\n";
}

}  // namespace

TrainResult run_training(const std::vector<scenario::Scenario>& dataset,
                  const anchors::AnchorSet& anchor_set, const TrainConfig& cfg,
                  std::ostream* loss_log,
                  const std::function<void(uint64_t, const LossBreakdown&)>& on_step) {
  if (dataset.empty()) throw InputError("train: empty dataset");

  TrainResult result;
  result.model = std::make_unique<model::Model>(cfg.model, anchor_set, cfg.seed);
  model::Model& m = *result.model;
  const auto& mc = m.config();

  std::vector<PreparedScenario> prep;
  prep.reserve(dataset.size());
  for (const auto& s : dataset) prep.push_back(prepare(s, m));

  AdamState adam;
  ParamStore& ps = m.params();
  for (int i = 0; i < ps.count(); ++i) {
    adam.m1.push_back(Tensor::zeros(ps.value(i).shape()));
    adam.m2.push_back(Tensor::zeros(ps.value(i).shape()));
  }

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  uint64_t step = 0;
  double last_total = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, 9000 + static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      const int64_t b = static_cast<int64_t>(end - start);

      Tensor grid({b, mc.grid_size, mc.grid_size, mc.classes});
      Tensor ego_in({b, mc.modes, static_cast<int64_t>(mc.horizon) * 2 + 7});
      BatchTargets targets;
      targets.gt = Tensor({b, static_cast<int64_t>(mc.horizon), 2});
      const int64_t cells = static_cast<int64_t>(mc.grid_size) * mc.grid_size;
      for (int64_t bi = 0; bi < b; ++bi) {
        const PreparedScenario& p = prep[order[start + static_cast<size_t>(bi)]];
        for (int64_t ci = 0; ci < cells; ++ci) {
          grid[(bi * cells + ci) * mc.classes + p.curr.labels[static_cast<size_t>(ci)]] = 1.0;
        }
        std::memcpy(ego_in.data() + bi * p.ego_inputs.numel(), p.ego_inputs.data(),
                    static_cast<size_t>(p.ego_inputs.numel()) * sizeof(double));
        std::memcpy(targets.gt.data() + bi * mc.horizon * 2, p.gt.data(),
                    static_cast<size_t>(mc.horizon) * 2 * sizeof(double));
        targets.curr.push_back(&p.curr);
        targets.fut.push_back(&p.fut);
      }

      Graph g(&ps);
      Var bev = model::encode_bev_tokens(g, m, g.input(std::move(grid)));
      Var ego0 = model::encode_ego(g, m, g.input(std::move(ego_in)));
      Var curr_logits = model::decode_bev_tokens(g, m, bev);
      model::IterationTrace trace =
          model::run_iterations(g, m, bev, ego0, mc.iterations, model::MapDecode::None);
      LossVars loss = build_loss(g, m, curr_logits, trace, targets, cfg.lambdas);

      check_finite(loss.values, step);
      ps.zero_grads();
      g.backward(loss.total);
      adam_step(ps, adam, cfg);

      if (loss_log) log_step(*loss_log, step, loss.values);
      if (on_step) on_step(step, loss.values);
      last_total = loss.values.total;
      ++step;
    }
  }
  result.steps = step;
  result.final_loss = last_total;
  return result;
}

}  // namespace seerdrive::train
