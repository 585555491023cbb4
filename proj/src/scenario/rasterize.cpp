#include "seerdrive/scenario/rasterize.hpp"

#include <cmath>

#include "seerdrive/core/errors.hpp"

namespace seerdrive::scenario {

namespace {

// Paint cells whose center lies inside an oriented box.
void paint_obb(SemanticGrid& g, const geom::Obb& box, uint8_t label) {
  const auto corners = box.corners();
  geom::Polygon poly(corners.begin(), corners.end());
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& c : corners) {
    min_x = std::min(min_x, c.x);
    max_x = std::max(max_x, c.x);
    min_y = std::min(min_y, c.y);
    max_y = std::max(max_y, c.y);
  }
  const double half = 0.5 * g.extent();
  const int c0 = std::max(0, static_cast<int>(std::floor((min_x + half) / g.cell_meters)));
  const int c1 = std::min(g.size - 1, static_cast<int>(std::ceil((max_x + half) / g.cell_meters)));
  const int r0 = std::max(0, static_cast<int>(std::floor((min_y + half) / g.cell_meters)));
  const int r1 = std::min(g.size - 1, static_cast<int>(std::ceil((max_y + half) / g.cell_meters)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (geom::point_in_polygon(g.cell_center(r, c), poly)) {
        g.labels[static_cast<size_t>(r * g.size + c)] = label;
      }
    }
  }
}

}  // namespace

SemanticGrid rasterize(const Scenario& s, double t, const GridSpec& spec) {
  if (t < -1e-9 || t > kHorizonSeconds + 1e-9) {
    throw DomainError("rasterize: t out of range [0, 4]");
  }
  const double steps = t / kStepSeconds;
  if (std::fabs(steps - std::round(steps)) > 1e-6) {
    throw DomainError("rasterize: t must be a multiple of 0.5 s");
  }

  SemanticGrid g;
  g.size = spec.size;
  g.cell_meters = spec.cell_meters;
  g.labels.assign(static_cast<size_t>(g.size) * static_cast<size_t>(g.size), 0);

  for (int r = 0; r < g.size; ++r) {
    for (int c = 0; c < g.size; ++c) {
      if (geom::point_in_union(g.cell_center(r, c), s.map.drivable)) {
        g.labels[static_cast<size_t>(r * g.size + c)] = 1;
      }
    }
  }
  for (const auto& agent : s.agents) paint_obb(g, agent.obb_at(t), 2);
  paint_obb(g, s.ego_obb(t), 3);
  return g;
}

}  // namespace seerdrive::scenario
