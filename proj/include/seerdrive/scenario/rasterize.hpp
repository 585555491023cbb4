#pragma once

#include "seerdrive/scenario/types.hpp"

namespace seerdrive::scenario {

// BEV semantic grid in the t=0 ego frame at time t (a multiple of 0.5 s in
// [0, 4]). Painter order: background < drivable < agent < ego; a cell takes a
// label when its center lies inside the shape.
SemanticGrid rasterize(const Scenario& s, double t, const GridSpec& spec = GridSpec{});

}  // namespace seerdrive::scenario
