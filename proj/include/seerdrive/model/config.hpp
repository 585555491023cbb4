#pragma once

#include <cstdint>
#include <string>

namespace seerdrive::model {

enum class Fusion { Mln, Cat, Add };
enum class FutureInit { Endpoints, Trajectories, Learned };
enum class WinnerRule { MinAde, Score };

const char* to_string(Fusion f);
const char* to_string(FutureInit f);
const char* to_string(WinnerRule w);
Fusion fusion_from_string(const std::string& s);
FutureInit future_init_from_string(const std::string& s);
WinnerRule winner_from_string(const std::string& s);

// Desk-scale defaults. Grid 64x64 at 1 m/cell with 8x8-cell patches gives an
// 8x8 token map; channels/modes stay configurable up to paper-scale values.
struct ModelConfig {
  int grid_size = 64;
  double cell_meters = 1.0;
  int patch = 8;
  int classes = 4;
  int horizon = 8;
  int modes = 16;
  int channels = 64;
  int heads = 4;
  int enc_layers = 2;
  int ffn_mult = 2;
  int iterations = 2;
  bool future_bev = true;
  bool decouple = true;
  bool mode_mix_attention = false;  // world-model attention across modes
  bool per_iteration_weights = false;
  bool share_ego_decoder = false;
  Fusion fusion = Fusion::Mln;
  FutureInit future_init = FutureInit::Endpoints;
  WinnerRule winner = WinnerRule::MinAde;

  int bev_hw() const { return grid_size / patch; }
  int tokens() const { return bev_hw() * bev_hw(); }

  void validate() const;
  std::string canonical_json() const;
  uint64_t hash() const;
  static ModelConfig from_json_text(const std::string& text);
  // Apply one "key=value" override (e.g. "channels=32", "fusion=cat").
  void apply_override(const std::string& kv);
};

}  // namespace seerdrive::model
