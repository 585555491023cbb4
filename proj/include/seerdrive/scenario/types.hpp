#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "seerdrive/scenario/geometry.hpp"

namespace seerdrive::scenario {

// Timeline: 2 Hz, 8 future steps (4 s planning horizon), tracks carry t=0 too.
constexpr int kHorizonSteps = 8;
constexpr double kStepSeconds = 0.5;
constexpr int kTrackSteps = kHorizonSteps + 1;
constexpr double kHorizonSeconds = kHorizonSteps * kStepSeconds;

constexpr double kEgoLength = 4.5;
constexpr double kEgoWidth = 2.0;
constexpr double kMaxAgentSpeed = 20.0;  // per-step displacement bound uses this

struct MapLayout {
  std::vector<geom::Polygon> drivable;
  std::vector<geom::Polyline> centerlines;
  int32_t route_index = 0;  // the route is one of the centerlines
  const geom::Polyline& route() const { return centerlines[static_cast<size_t>(route_index)]; }
};

struct AgentTrack {
  std::vector<geom::Vec2> positions;  // kTrackSteps entries at 0.5 s spacing
  std::vector<double> headings;
  double length = 4.5;
  double width = 1.9;

  geom::Vec2 position_at(double t) const;
  double heading_at(double t) const;
  geom::Obb obb_at(double t) const;
};

struct EgoStatus {
  geom::Vec2 velocity;
  geom::Vec2 acceleration;
  std::array<double, 3> command{0, 1, 0};  // one-hot {left, straight, right}
};

enum class Template : int32_t { Straight = 0, Left = 1, Right = 2, Stop = 3 };
const char* template_name(Template t);

struct Scenario {
  int64_t seed = 0;
  int32_t template_id = 0;
  MapLayout map;
  std::vector<AgentTrack> agents;
  EgoStatus ego_status;
  std::array<geom::Vec2, kHorizonSteps> ego_future{};
  double ego_length = kEgoLength;
  double ego_width = kEgoWidth;

  // Ground-truth ego pose in the t=0 ego frame. t=0 is the origin with
  // heading +x; headings are taken from consecutive trajectory points.
  geom::Vec2 ego_position(double t) const;
  double ego_heading(double t) const;
  geom::Obb ego_obb(double t) const;
};

bool operator==(const AgentTrack& a, const AgentTrack& b);
bool operator==(const Scenario& a, const Scenario& b);

// Heading sequence over trajectory waypoints prepended with the origin:
// heading[i] belongs to waypoint i of `traj` and comes from the segment
// leaving it (the last point reuses the incoming segment).
std::vector<double> waypoint_headings(const std::vector<geom::Vec2>& traj);

struct SemanticGrid {
  static constexpr int kClasses = 4;  // 0 background, 1 drivable, 2 agent, 3 ego
  int32_t size = 64;
  double cell_meters = 1.0;
  std::vector<uint8_t> labels;  // row-major [size, size], row = y index

  uint8_t at(int row, int col) const {
    return labels[static_cast<size_t>(row * size + col)];
  }
  double extent() const { return size * cell_meters; }
  // center coordinates of a cell in the ego frame
  geom::Vec2 cell_center(int row, int col) const {
    const double half = 0.5 * extent();
    return {(col + 0.5) * cell_meters - half, (row + 0.5) * cell_meters - half};
  }
};

struct GridSpec {
  int32_t size = 64;
  double cell_meters = 1.0;
};

}  // namespace seerdrive::scenario
