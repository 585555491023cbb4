#include "seerdrive/model/model.hpp"

#include <cmath>
#include <iostream>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/rng.hpp"
#include "seerdrive/core/serialize.hpp"

namespace seerdrive::model {

namespace {

constexpr uint32_t kCkptMagic = 0x5344434b;  // "SDCK"
constexpr uint32_t kCkptVersion = 1;

struct ParamBuilder {
  ParamStore& store;
  Rng& rng;

  Tensor xavier(int64_t in, int64_t out) {
    Tensor t({in, out});
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
  }

  LinearIds linear(const std::string& name, int64_t in, int64_t out, bool zero_init = false) {
    LinearIds ids;
    ids.w = store.add(name + "/w", zero_init ? Tensor::zeros({in, out}) : xavier(in, out));
    ids.b = store.add(name + "/b", Tensor::zeros({out}));
    return ids;
  }

  // two-layer mlp; zero_last pins the initial output to zero
  MlpIds mlp(const std::string& name, int64_t in, int64_t hidden, int64_t out,
             bool zero_last = false) {
    MlpIds ids;
    ids.l1 = linear(name + "/l1", in, hidden);
    ids.l2 = linear(name + "/l2", hidden, out, zero_last);
    return ids;
  }

  LnIds layer_norm(const std::string& name, int64_t c) {
    LnIds ids;
    ids.g = store.add(name + "/g", Tensor::full({c}, 1.0));
    ids.b = store.add(name + "/b", Tensor::zeros({c}));
    return ids;
  }

  MhaIds mha(const std::string& name, int64_t c) {
    MhaIds ids;
    ids.q = linear(name + "/wq", c, c);
    ids.k = linear(name + "/wk", c, c);
    ids.v = linear(name + "/wv", c, c);
    ids.o = linear(name + "/wo", c, c);
    return ids;
  }

  Tensor small_normal(std::vector<int64_t> shape) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, 0.02);
    return t;
  }

  EncLayerIds enc_layer(const std::string& name, int64_t c, int64_t ffn_mult) {
    EncLayerIds ids;
    ids.ln1 = layer_norm(name + "/ln1", c);
    ids.ln2 = layer_norm(name + "/ln2", c);
    ids.mha = mha(name + "/mha", c);
    ids.ffn = mlp(name + "/ffn", c, c * ffn_mult, c);
    return ids;
  }

  CrossBlockIds cross_block(const std::string& name, int64_t c, int64_t ffn_mult,
                            int64_t mem_tokens) {
    CrossBlockIds ids;
    ids.lnq = layer_norm(name + "/lnq", c);
    ids.ln2 = layer_norm(name + "/ln2", c);
    ids.mha = mha(name + "/mha", c);
    ids.ffn = mlp(name + "/ffn", c, c * ffn_mult, c);
    ids.mem_pos = store.add(name + "/pos", small_normal({mem_tokens, c}));
    return ids;
  }
};

}  // namespace

Model::Model(ModelConfig cfg, anchors::AnchorSet anchor_set, uint64_t init_seed)
    : cfg_(std::move(cfg)), anchors_(std::move(anchor_set)), init_seed_(init_seed) {
  cfg_.validate();
  if (anchors_.modes() != cfg_.modes) {
    throw ConfigError("anchor set has " + std::to_string(anchors_.modes()) + " modes, config wants " +
                      std::to_string(cfg_.modes));
  }
  if (anchors_.horizon() != cfg_.horizon) {
    throw ConfigError("anchor horizon does not match config horizon");
  }
  build_params();
}

void Model::build_params() {
  Rng rng(init_seed_, 1000);
  ParamBuilder pb{params_, rng};
  const int64_t c = cfg_.channels;
  const int64_t patch_in = static_cast<int64_t>(cfg_.patch) * cfg_.patch * cfg_.classes;
  const int64_t tokens = cfg_.tokens();
  const int64_t t2 = static_cast<int64_t>(cfg_.horizon) * 2;

  ids_.obs_encoder = pb.mlp("enc/obs", patch_in, c, c);
  ids_.ego_encoder = pb.mlp("enc/ego", t2 + 7, c, c);
  ids_.bev_decoder = pb.mlp("enc/dec", c, 2 * c, static_cast<int64_t>(cfg_.patch) * cfg_.patch * cfg_.classes);

  const int blocks = cfg_.per_iteration_weights ? cfg_.iterations : 1;
  for (int bi = 0; bi < blocks; ++bi) {
    const std::string wname = "world" + std::to_string(bi);
    WorldModelIds w;
    w.pos = params_.add(wname + "/pos", pb.small_normal({tokens + 1, c}));
    for (int l = 0; l < cfg_.enc_layers; ++l) {
      w.layers.push_back(pb.enc_layer(wname + "/l" + std::to_string(l), c, cfg_.ffn_mult));
    }
    w.ln_final = pb.layer_norm(wname + "/ln_f", c);
    ids_.world.push_back(std::move(w));

    const std::string pname = "plan" + std::to_string(bi);
    PlannerIds p;
    p.cur = pb.cross_block(pname + "/cur", c, cfg_.ffn_mult, tokens);
    p.fut = pb.cross_block(pname + "/fut", c, cfg_.ffn_mult, tokens);
    switch (cfg_.future_init) {
      case FutureInit::Endpoints:
        p.future_init = pb.mlp(pname + "/finit", 2, c, c);
        break;
      case FutureInit::Trajectories:
        p.future_init = pb.mlp(pname + "/finit", t2, c, c);
        break;
      case FutureInit::Learned:
        p.future_query = params_.add(pname + "/fquery", pb.small_normal({cfg_.modes, c}));
        break;
    }
    if (cfg_.fusion == Fusion::Mln) {
      p.mln_gamma = pb.mlp(pname + "/mln_g", c, c, c, /*zero_last=*/true);
      p.mln_beta = pb.mlp(pname + "/mln_b", c, c, c, /*zero_last=*/true);
    } else if (cfg_.fusion == Fusion::Cat) {
      p.fuse_cat = pb.mlp(pname + "/fuse_cat", 2 * c, c, c);
    }
    p.head_a = pb.mlp(pname + "/head_a", c, c, t2, /*zero_last=*/true);
    if (!cfg_.share_ego_decoder) {
      p.head_b = pb.mlp(pname + "/head_b", c, c, t2, /*zero_last=*/true);
      p.head_final = pb.mlp(pname + "/head_final", c, c, t2, /*zero_last=*/true);
    } else {
      p.head_b = p.head_a;
      p.head_final = p.head_a;
    }
    p.score = pb.linear(pname + "/score", c, 1);
    ids_.planner.push_back(std::move(p));
  }

  params_.snap_f32();
}

const WorldModelIds& Model::world_ids(int iteration) const {
  const int i = cfg_.per_iteration_weights ? iteration : 0;
  return ids_.world[static_cast<size_t>(i)];
}

const PlannerIds& Model::planner_ids(int iteration) const {
  const int i = cfg_.per_iteration_weights ? iteration : 0;
  return ids_.planner[static_cast<size_t>(i)];
}

void save_checkpoint(const Model& m, const std::string& path, uint64_t step_count,
                     double loss_at_save) {
  io::Writer w(path);
  w.u32(kCkptMagic);
  w.u32(kCkptVersion);
  const std::string cfg_json = m.config().canonical_json();
  w.str(cfg_json);
  w.u64(m.config().hash());
  w.u64(step_count);
  w.f64(loss_at_save);
  // anchors
  const auto& a = m.anchor_set();
  w.u32(static_cast<uint32_t>(a.modes()));
  w.u32(static_cast<uint32_t>(a.horizon()));
  w.i64(a.fit_seed);
  w.f64(a.inertia);
  w.f32_array(a.anchors.data(), a.anchors.numel());
  // parameters
  const ParamStore& ps = m.params();
  w.u32(static_cast<uint32_t>(ps.count()));
  for (int i = 0; i < ps.count(); ++i) {
    w.str(ps.name(i));
    io::write_tensor(w, ps.value(i));
  }
  w.finish_with_crc();
}

LoadedCheckpoint load_checkpoint(const std::string& path, bool strict,
                                 std::optional<uint64_t> expected_config_hash) {
  io::Reader r(path);
  if (r.u32() != kCkptMagic) throw VersionError(path + " (bad magic)");
  const uint32_t version = r.u32();
  if (version != kCkptVersion) {
    throw VersionError(path + " (checkpoint version " + std::to_string(version) + ")");
  }
  const std::string cfg_json = r.str();
  const uint64_t stored_hash = r.u64();
  const uint64_t step_count = r.u64();
  const double loss_at_save = r.f64();

  anchors::AnchorSet a;
  const int64_t modes = r.u32();
  const int64_t horizon = r.u32();
  a.fit_seed = r.i64();
  a.inertia = r.f64();
  a.anchors = Tensor({modes, horizon, 2}, r.f32_array(modes * horizon * 2));

  const ModelConfig cfg = ModelConfig::from_json_text(cfg_json);
  if (expected_config_hash && *expected_config_hash != stored_hash) {
    const std::string msg = path + ": checkpoint config hash " + io::hex64(stored_hash) +
                            " does not match expected " + io::hex64(*expected_config_hash);
    if (strict) throw ConfigError(msg);
    std::cerr << "warning: " << msg << "\n";
  }

  LoadedCheckpoint out{Model(cfg, std::move(a), /*init_seed=*/0), step_count, loss_at_save,
                       stored_hash};
  ParamStore& ps = out.model.params();
  const uint32_t n_params = r.u32();
  if (static_cast<int>(n_params) != ps.count()) {
    throw VersionError(path + " (parameter count mismatch)");
  }
  for (uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    const int id = ps.find(name);
    if (id < 0) throw VersionError(path + " (unknown parameter '" + name + "')");
    Tensor t = io::read_tensor(r);
    if (t.shape() != ps.value(id).shape()) {
      throw VersionError(path + " (shape mismatch for '" + name + "')");
    }
    ps.value(id) = std::move(t);
  }
  r.check_trailing_crc();
  return out;
}

}  // namespace seerdrive::model
