#pragma once

#include <vector>

#include "seerdrive/core/tensor.hpp"
#include "seerdrive/scenario/types.hpp"

namespace seerdrive::eval {

// Open-loop metric primitives. Documented desk-scale constants:
//   TTC: 1 s constant-velocity forward projection probed at 0.1 s steps.
//   Comfort: |accel| <= 8 m/s^2, |jerk| <= 15 m/s^3, |yaw rate| <= 1.5 rad/s
//            (yaw rate checked only above 0.1 m/s).
//   Drivable-area check probes the ego box corners plus the center.
//   Ego progress: route arc-length gain of the final waypoint, clipped by the
//                 ground-truth gain; gains under 0.1 m count as full progress.

struct L2Result {
  double at_1s = 0, at_2s = 0, at_3s = 0, at_4s = 0;
  double avg = 0;
};

// Displacement at the waypoint closest to each horizon (VAD-style protocol).
L2Result l2_error(const std::vector<geom::Vec2>& pred, const std::vector<geom::Vec2>& gt);

double ade(const std::vector<geom::Vec2>& pred, const std::vector<geom::Vec2>& gt);

// 1 iff the ego box overlaps any agent box at any future step.
int collision_flag(const std::vector<geom::Vec2>& pred, const scenario::Scenario& s);

struct PdmSubscores {
  double nc = 1, dac = 1, ttc = 1, ep = 1, comf = 1;
};

PdmSubscores pdm_subscores(const std::vector<geom::Vec2>& pred, const scenario::Scenario& s);

// NC * DAC * TTC * (5*EP + 5*Comf + 2) / 12 (direction compliance excluded,
// fixed at its full value).
double pdm_aggregate(const PdmSubscores& sub);

// Mean IoU over the classes present in the target grid.
double miou(const std::vector<uint8_t>& pred_labels, const scenario::SemanticGrid& target);

// Ego boxes along a predicted trajectory (headings from consecutive points).
std::vector<geom::Obb> ego_boxes(const std::vector<geom::Vec2>& pred, double length, double width);

}  // namespace seerdrive::eval
