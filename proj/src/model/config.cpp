#include "seerdrive/model/config.hpp"

#include <json.hpp>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/serialize.hpp"

namespace seerdrive::model {

const char* to_string(Fusion f) {
  switch (f) {
    case Fusion::Mln: return "mln";
    case Fusion::Cat: return "cat";
    case Fusion::Add: return "add";
  }
  return "?";
}

const char* to_string(FutureInit f) {
  switch (f) {
    case FutureInit::Endpoints: return "endpoints";
    case FutureInit::Trajectories: return "trajectories";
    case FutureInit::Learned: return "learned";
  }
  return "?";
}

const char* to_string(WinnerRule w) {
  return w == WinnerRule::MinAde ? "min_ade" : "score";
}

Fusion fusion_from_string(const std::string& s) {
  if (s == "mln") return Fusion::Mln;
  if (s == "cat") return Fusion::Cat;
  if (s == "add") return Fusion::Add;
  throw ConfigError("unknown fusion: " + s);
}

FutureInit future_init_from_string(const std::string& s) {
  if (s == "endpoints") return FutureInit::Endpoints;
  if (s == "trajectories") return FutureInit::Trajectories;
  if (s == "learned") return FutureInit::Learned;
  throw ConfigError("unknown future_init: " + s);
}

WinnerRule winner_from_string(const std::string& s) {
  if (s == "min_ade") return WinnerRule::MinAde;
  if (s == "score") return WinnerRule::Score;
  throw ConfigError("unknown winner rule: " + s);
}

void ModelConfig::validate() const {
  if (grid_size <= 0 || patch <= 0 || grid_size % patch != 0) {
    throw ConfigError("grid_size must be a positive multiple of patch");
  }
  if (channels <= 0 || heads <= 0 || channels % heads != 0) {
    throw ConfigError("channels must be divisible by heads");
  }
  if (modes < 2) throw ConfigError("modes must be >= 2");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (enc_layers < 1 || ffn_mult < 1) throw ConfigError("enc_layers/ffn_mult must be >= 1");
  if (classes != 4) throw ConfigError("classes is fixed at 4");
}

std::string ModelConfig::canonical_json() const {
  nlohmann::ordered_json j;
  j["grid_size"] = grid_size;
  j["cell_meters"] = cell_meters;
  j["patch"] = patch;
  j["classes"] = classes;
  j["horizon"] = horizon;
  j["modes"] = modes;
  j["channels"] = channels;
  j["heads"] = heads;
  j["enc_layers"] = enc_layers;
  j["ffn_mult"] = ffn_mult;
  j["iterations"] = iterations;
  j["future_bev"] = future_bev;
  j["decouple"] = decouple;
  j["mode_mix_attention"] = mode_mix_attention;
  j["per_iteration_weights"] = per_iteration_weights;
  j["share_ego_decoder"] = share_ego_decoder;
  j["fusion"] = to_string(fusion);
  j["future_init"] = to_string(future_init);
  j["winner"] = to_string(winner);
  return j.dump();
}

uint64_t ModelConfig::hash() const { return io::fnv1a(canonical_json()); }

ModelConfig ModelConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config json: ") + e.what());
  }
  ModelConfig c;
  auto get_int = [&](const char* k, int& dst) { if (j.contains(k)) dst = j[k].get<int>(); };
  auto get_bool = [&](const char* k, bool& dst) { if (j.contains(k)) dst = j[k].get<bool>(); };
  get_int("grid_size", c.grid_size);
  if (j.contains("cell_meters")) c.cell_meters = j["cell_meters"].get<double>();
  get_int("patch", c.patch);
  get_int("classes", c.classes);
  get_int("horizon", c.horizon);
  get_int("modes", c.modes);
  get_int("channels", c.channels);
  get_int("heads", c.heads);
  get_int("enc_layers", c.enc_layers);
  get_int("ffn_mult", c.ffn_mult);
  get_int("iterations", c.iterations);
  get_bool("future_bev", c.future_bev);
  get_bool("decouple", c.decouple);
  get_bool("mode_mix_attention", c.mode_mix_attention);
  get_bool("per_iteration_weights", c.per_iteration_weights);
  get_bool("share_ego_decoder", c.share_ego_decoder);
  if (j.contains("fusion")) c.fusion = fusion_from_string(j["fusion"].get<std::string>());
  if (j.contains("future_init")) c.future_init = future_init_from_string(j["future_init"].get<std::string>());
  if (j.contains("winner")) c.winner = winner_from_string(j["winner"].get<std::string>());
  c.validate();
  return c;
}

void ModelConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  auto as_int = [&] { return std::stoi(value); };
  auto as_bool = [&] {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError("bad boolean: " + kv);
  };
  if (key == "grid_size") grid_size = as_int();
  else if (key == "cell_meters") cell_meters = std::stod(value);
  else if (key == "patch") patch = as_int();
  else if (key == "horizon") horizon = as_int();
  else if (key == "modes") modes = as_int();
  else if (key == "channels") channels = as_int();
  else if (key == "heads") heads = as_int();
  else if (key == "enc_layers") enc_layers = as_int();
  else if (key == "ffn_mult") ffn_mult = as_int();
  else if (key == "iterations") iterations = as_int();
  else if (key == "future_bev") future_bev = as_bool();
  else if (key == "decouple") decouple = as_bool();
  else if (key == "mode_mix_attention") mode_mix_attention = as_bool();
  else if (key == "per_iteration_weights") per_iteration_weights = as_bool();
  else if (key == "share_ego_decoder") share_ego_decoder = as_bool();
  else if (key == "fusion") fusion = fusion_from_string(value);
  else if (key == "future_init") future_init = future_init_from_string(value);
  else if (key == "winner") winner = winner_from_string(value);
  else throw ConfigError("unknown model config key: " + key);
  validate();
}

}  // namespace seerdrive::model
