#include "seerdrive/scenario/geometry.hpp"

namespace seerdrive::geom {

std::array<Vec2, 4> Obb::corners() const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const Vec2 ax{c * hl, s * hl};
  const Vec2 ay{-s * hw, c * hw};
  return {center + ax + ay, center + ax - ay, center - ax - ay, center - ax + ay};
}

bool point_in_polygon(Vec2 p, const Polygon& poly) {
  const size_t n = poly.size();
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    // boundary counts as inside
    const double cross = (b - a).cross(p - a);
    if (std::fabs(cross) < 1e-12 && (p - a).dot(p - b) <= 1e-12) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double xint = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

bool point_in_union(Vec2 p, const std::vector<Polygon>& polys) {
  for (const auto& poly : polys) {
    if (point_in_polygon(p, poly)) return true;
  }
  return false;
}

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const Vec2 r = a1 - a0;
  const Vec2 s = b1 - b0;
  const double rxs = r.cross(s);
  const Vec2 qp = b0 - a0;
  if (std::fabs(rxs) < 1e-14) {
    // parallel: overlap only if collinear and ranges intersect
    if (std::fabs(qp.cross(r)) > 1e-12) return false;
    const double rr = r.dot(r);
    if (rr < 1e-18) return (b0 - a0).norm() < 1e-9;
    const double t0 = qp.dot(r) / rr;
    const double t1 = (b1 - a0).dot(r) / rr;
    return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
  }
  const double t = qp.cross(s) / rxs;
  const double u = qp.cross(r) / rxs;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

bool obb_overlap(const Obb& a, const Obb& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  // any edge pair intersecting
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (segments_intersect(ca[static_cast<size_t>(i)], ca[static_cast<size_t>((i + 1) % 4)],
                             cb[static_cast<size_t>(j)], cb[static_cast<size_t>((j + 1) % 4)]))
        return true;
    }
  }
  // full containment either way
  const Polygon pa(ca.begin(), ca.end());
  const Polygon pb(cb.begin(), cb.end());
  if (point_in_polygon(a.center, pb)) return true;
  if (point_in_polygon(b.center, pa)) return true;
  return false;
}

double polyline_length(const Polyline& line) {
  double s = 0.0;
  for (size_t i = 1; i < line.size(); ++i) s += (line[i] - line[i - 1]).norm();
  return s;
}

double project_arclength(const Polyline& line, Vec2 p) {
  double best_d2 = 1e300;
  double best_s = 0.0;
  double s0 = 0.0;
  for (size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1];
    const Vec2 b = line[i];
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 1e-18 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const double d2 = (p - q).dot(p - q);
    const double seg_len = std::sqrt(len2);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = s0 + t * seg_len;
    }
    s0 += seg_len;
  }
  return best_s;
}

}  // namespace seerdrive::geom
