#pragma once

#include <string>

#include "seerdrive/eval/evaluate.hpp"
#include "seerdrive/model/model.hpp"

namespace seerdrive::render {

struct RenderSpec {
  int64_t index = 0;  // scenario index within the dataset
  bool panel_current = true;
  bool panel_future = true;   // winner-mode predicted future map
  bool panel_traj = true;     // ground truth vs final trajectory
  bool panel_modes = true;    // all-mode trajectories
  std::string out_path;       // .bmp; a .json sidecar lands next to it

  void validate() const;  // at least one panel, output path set
};

// Writes a BMP with the selected panels side by side plus a numeric sidecar
// (<out>.json) holding every plotted array, so figures diff numerically.
void render_scenario(const model::Model& m, const scenario::Scenario& s, const RenderSpec& spec);

}  // namespace seerdrive::render
