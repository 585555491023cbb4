#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace seerdrive::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

using Polygon = std::vector<Vec2>;
using Polyline = std::vector<Vec2>;

// Oriented box: center, heading (radians), length along heading, width across.
struct Obb {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
  std::array<Vec2, 4> corners() const;
};

// Ray-crossing point-in-polygon; points on the boundary count as inside.
bool point_in_polygon(Vec2 p, const Polygon& poly);

// True if p is inside any polygon of the union.
bool point_in_union(Vec2 p, const std::vector<Polygon>& polys);

// Exact convex-quad overlap via edge intersections plus containment probes.
// The test oracle uses a separating-axis formulation instead; both must agree.
bool obb_overlap(const Obb& a, const Obb& b);

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);

// Arc-length of the closest point on a polyline to p.
double project_arclength(const Polyline& line, Vec2 p);
double polyline_length(const Polyline& line);

}  // namespace seerdrive::geom
