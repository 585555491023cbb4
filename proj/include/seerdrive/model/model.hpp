#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seerdrive/anchors/anchors.hpp"
#include "seerdrive/core/graph.hpp"
#include "seerdrive/model/config.hpp"

namespace seerdrive::model {

// Parameter-id bundles; resolved once at model construction.
struct LinearIds {
  int w = -1;
  int b = -1;
};
struct MlpIds {
  LinearIds l1, l2;
};
struct LnIds {
  int g = -1;
  int b = -1;
};
struct MhaIds {
  LinearIds q, k, v, o;
};
struct EncLayerIds {
  LnIds ln1, ln2;
  MhaIds mha;
  MlpIds ffn;
};
struct CrossBlockIds {
  LnIds lnq, ln2;
  MhaIds mha;
  MlpIds ffn;
  int mem_pos = -1;
};
struct WorldModelIds {
  int pos = -1;
  std::vector<EncLayerIds> layers;
  LnIds ln_final;
};
struct PlannerIds {
  CrossBlockIds cur;
  CrossBlockIds fut;
  MlpIds future_init;      // endpoints or trajectories embedding
  int future_query = -1;   // learned-query initialization
  MlpIds mln_gamma, mln_beta;
  MlpIds fuse_cat;
  MlpIds head_a, head_b, head_final;
  LinearIds score;
};

struct ModelIds {
  MlpIds obs_encoder;
  MlpIds ego_encoder;
  MlpIds bev_decoder;
  std::vector<WorldModelIds> world;    // one entry, or N with per-iteration weights
  std::vector<PlannerIds> planner;
};

// Coordinates (anchors, endpoints, ego status) are scaled by this before
// entering any embedding MLP.
constexpr double kCoordScale = 0.1;
constexpr double kLnEps = 1e-8;

class Model {
 public:
  Model(ModelConfig cfg, anchors::AnchorSet anchor_set, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const anchors::AnchorSet& anchor_set() const { return anchors_; }
  const ModelIds& ids() const { return ids_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  uint64_t init_seed() const { return init_seed_; }

  const WorldModelIds& world_ids(int iteration) const;
  const PlannerIds& planner_ids(int iteration) const;

 private:
  void build_params();

  ModelConfig cfg_;
  anchors::AnchorSet anchors_;
  ParamStore params_;
  ModelIds ids_;
  uint64_t init_seed_ = 0;
};

// Checkpoint persistence: f32 parameter blob with embedded model config and
// anchors, guarded by a trailing crc32.
void save_checkpoint(const Model& m, const std::string& path, uint64_t step_count,
                     double loss_at_save);

struct LoadedCheckpoint {
  Model model;
  uint64_t step_count = 0;
  double loss_at_save = 0.0;
  uint64_t config_hash = 0;
};

// `expected_config_hash`: refusal (strict) or warning (non-strict, to stderr)
// when the stored hash differs.
LoadedCheckpoint load_checkpoint(const std::string& path, bool strict = false,
                                 std::optional<uint64_t> expected_config_hash = std::nullopt);

}  // namespace seerdrive::model
