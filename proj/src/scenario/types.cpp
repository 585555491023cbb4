#include "seerdrive/scenario/types.hpp"

#include <cmath>

namespace seerdrive::scenario {

namespace {

double lerp_angle(double a, double b, double t) {
  double d = b - a;
  while (d > M_PI) d -= 2.0 * M_PI;
  while (d < -M_PI) d += 2.0 * M_PI;
  return a + t * d;
}

}  // namespace

const char* template_name(Template t) {
  switch (t) {
    case Template::Straight: return "straight";
    case Template::Left: return "left";
    case Template::Right: return "right";
    case Template::Stop: return "stop";
  }
  return "?";
}

geom::Vec2 AgentTrack::position_at(double t) const {
  const double step = t / kStepSeconds;
  const int i0 = std::clamp(static_cast<int>(std::floor(step)), 0, kTrackSteps - 1);
  const int i1 = std::min(i0 + 1, kTrackSteps - 1);
  const double f = std::clamp(step - i0, 0.0, 1.0);
  const geom::Vec2 a = positions[static_cast<size_t>(i0)];
  const geom::Vec2 b = positions[static_cast<size_t>(i1)];
  return a + (b - a) * f;
}

double AgentTrack::heading_at(double t) const {
  const double step = t / kStepSeconds;
  const int i0 = std::clamp(static_cast<int>(std::floor(step)), 0, kTrackSteps - 1);
  const int i1 = std::min(i0 + 1, kTrackSteps - 1);
  const double f = std::clamp(step - i0, 0.0, 1.0);
  return lerp_angle(headings[static_cast<size_t>(i0)], headings[static_cast<size_t>(i1)], f);
}

geom::Obb AgentTrack::obb_at(double t) const {
  return geom::Obb{position_at(t), heading_at(t), length, width};
}

std::vector<double> waypoint_headings(const std::vector<geom::Vec2>& traj) {
  // Prepend the origin so the first waypoint has an incoming segment.
  std::vector<geom::Vec2> pts;
  pts.reserve(traj.size() + 1);
  pts.push_back({0.0, 0.0});
  pts.insert(pts.end(), traj.begin(), traj.end());

  std::vector<double> h(traj.size(), 0.0);
  double prev = 0.0;
  for (size_t i = 0; i < traj.size(); ++i) {
    // segment leaving waypoint i (pts[i+1] -> pts[i+2]); last reuses incoming
    const size_t a = i + 1;
    const size_t b = std::min(i + 2, pts.size() - 1);
    geom::Vec2 d = pts[b] - pts[a];
    if (d.norm() < 1e-9) d = pts[a] - pts[a - 1];
    if (d.norm() >= 1e-9) prev = std::atan2(d.y, d.x);
    h[i] = prev;
  }
  return h;
}

geom::Vec2 Scenario::ego_position(double t) const {
  if (t <= 0.0) return {0.0, 0.0};
  const double step = t / kStepSeconds;
  const int i1 = std::clamp(static_cast<int>(std::ceil(step - 1e-9)), 1, kHorizonSteps);
  const int i0 = i1 - 1;
  const double frac = std::clamp(step - i0, 0.0, 1.0);
  const geom::Vec2 a = i0 == 0 ? geom::Vec2{0.0, 0.0} : ego_future[static_cast<size_t>(i0 - 1)];
  const geom::Vec2 b = ego_future[static_cast<size_t>(i1 - 1)];
  return a + (b - a) * frac;
}

double Scenario::ego_heading(double t) const {
  const std::vector<geom::Vec2> traj(ego_future.begin(), ego_future.end());
  const auto h = waypoint_headings(traj);
  if (t <= 0.0) {
    // heading of the first segment
    const geom::Vec2 d = ego_future[0];
    return d.norm() >= 1e-9 ? std::atan2(d.y, d.x) : 0.0;
  }
  const double step = t / kStepSeconds;
  const int i1 = std::clamp(static_cast<int>(std::ceil(step - 1e-9)), 1, kHorizonSteps);
  return h[static_cast<size_t>(i1 - 1)];
}

geom::Obb Scenario::ego_obb(double t) const {
  return geom::Obb{ego_position(t), ego_heading(t), ego_length, ego_width};
}

bool operator==(const AgentTrack& a, const AgentTrack& b) {
  if (a.length != b.length || a.width != b.width) return false;
  if (a.positions.size() != b.positions.size() || a.headings != b.headings) return false;
  for (size_t i = 0; i < a.positions.size(); ++i) {
    if (a.positions[i].x != b.positions[i].x || a.positions[i].y != b.positions[i].y) return false;
  }
  return true;
}

bool operator==(const Scenario& a, const Scenario& b) {
  if (a.seed != b.seed || a.template_id != b.template_id) return false;
  if (a.ego_length != b.ego_length || a.ego_width != b.ego_width) return false;
  if (a.ego_status.velocity.x != b.ego_status.velocity.x ||
      a.ego_status.velocity.y != b.ego_status.velocity.y ||
      a.ego_status.acceleration.x != b.ego_status.acceleration.x ||
      a.ego_status.acceleration.y != b.ego_status.acceleration.y ||
      a.ego_status.command != b.ego_status.command)
    return false;
  for (int i = 0; i < kHorizonSteps; ++i) {
    if (a.ego_future[static_cast<size_t>(i)].x != b.ego_future[static_cast<size_t>(i)].x ||
        a.ego_future[static_cast<size_t>(i)].y != b.ego_future[static_cast<size_t>(i)].y)
      return false;
  }
  if (a.agents.size() != b.agents.size()) return false;
  for (size_t i = 0; i < a.agents.size(); ++i) {
    if (!(a.agents[i] == b.agents[i])) return false;
  }
  if (a.map.route_index != b.map.route_index) return false;
  if (a.map.drivable.size() != b.map.drivable.size() ||
      a.map.centerlines.size() != b.map.centerlines.size())
    return false;
  auto poly_eq = [](const geom::Polyline& p, const geom::Polyline& q) {
    if (p.size() != q.size()) return false;
    for (size_t i = 0; i < p.size(); ++i) {
      if (p[i].x != q[i].x || p[i].y != q[i].y) return false;
    }
    return true;
  };
  for (size_t i = 0; i < a.map.drivable.size(); ++i) {
    if (!poly_eq(a.map.drivable[i], b.map.drivable[i])) return false;
  }
  for (size_t i = 0; i < a.map.centerlines.size(); ++i) {
    if (!poly_eq(a.map.centerlines[i], b.map.centerlines[i])) return false;
  }
  return true;
}

}  // namespace seerdrive::scenario
