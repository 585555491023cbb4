#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seerdrive/core/tensor.hpp"
#include "seerdrive/scenario/types.hpp"

namespace seerdrive::anchors {

// Trajectory vocabulary fit by k-means over ground-truth futures flattened to
// R^(2*T). Anchors are ordered by endpoint heading angle so mode indices are
// stable across runs.
struct AnchorSet {
  Tensor anchors;  // [M, T, 2]
  int64_t fit_seed = 0;
  double inertia = 0.0;

  int64_t modes() const { return anchors.dim(0); }
  int64_t horizon() const { return anchors.dim(1); }
  // [M, 2] endpoints (last waypoint of each anchor)
  Tensor endpoints() const;
};

AnchorSet fit_anchors(const std::vector<std::vector<geom::Vec2>>& futures, int64_t modes,
                      int iters, uint64_t seed);

// Convenience: collect ego futures from scenarios and fit.
AnchorSet fit_anchors(const std::vector<scenario::Scenario>& scenarios, int64_t modes, int iters,
                      uint64_t seed);

void save_anchors(const AnchorSet& a, const std::string& path);
AnchorSet load_anchors(const std::string& path);

// Inertia of assigning each future to its nearest row of `centers` ([M, T, 2]).
double assignment_inertia(const std::vector<std::vector<geom::Vec2>>& futures,
                          const Tensor& centers);

}  // namespace seerdrive::anchors
