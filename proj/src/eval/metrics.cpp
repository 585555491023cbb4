#include "seerdrive/eval/metrics.hpp"

#include <cmath>

#include "seerdrive/core/errors.hpp"

namespace seerdrive::eval {

namespace {

constexpr double kTtcHorizon = 1.0;
constexpr double kTtcStep = 0.1;
constexpr double kMaxAccel = 8.0;
constexpr double kMaxJerk = 15.0;
constexpr double kMaxYawRate = 1.5;
constexpr double kYawSpeedFloor = 0.1;
constexpr double kMinProgress = 0.1;

}  // namespace

L2Result l2_error(const std::vector<geom::Vec2>& pred, const std::vector<geom::Vec2>& gt) {
  if (pred.size() != gt.size()) throw InputError("l2_error: length mismatch");
  auto at_step = [&](size_t idx) {
    return (pred[idx] - gt[idx]).norm();
  };
  // 2 Hz: the waypoint nearest k seconds is index 2k-1
  L2Result r;
  r.at_1s = at_step(1);
  r.at_2s = at_step(3);
  r.at_3s = at_step(5);
  r.at_4s = at_step(7);
  r.avg = (r.at_1s + r.at_2s + r.at_3s + r.at_4s) / 4.0;
  return r;
}

double ade(const std::vector<geom::Vec2>& pred, const std::vector<geom::Vec2>& gt) {
  if (pred.size() != gt.size()) throw InputError("ade: length mismatch");
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - gt[i]).norm();
  return acc / static_cast<double>(pred.size());
}

std::vector<geom::Obb> ego_boxes(const std::vector<geom::Vec2>& pred, double length, double width) {
  const auto headings = scenario::waypoint_headings(pred);
  std::vector<geom::Obb> boxes;
  boxes.reserve(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    boxes.push_back(geom::Obb{pred[i], headings[i], length, width});
  }
  return boxes;
}

int collision_flag(const std::vector<geom::Vec2>& pred, const scenario::Scenario& s) {
  const auto boxes = ego_boxes(pred, s.ego_length, s.ego_width);
  for (size_t k = 0; k < pred.size(); ++k) {
    const double t = (static_cast<double>(k) + 1.0) * scenario::kStepSeconds;
    for (const auto& agent : s.agents) {
      if (geom::obb_overlap(boxes[k], agent.obb_at(t))) return 1;
    }
  }
  return 0;
}

PdmSubscores pdm_subscores(const std::vector<geom::Vec2>& pred, const scenario::Scenario& s) {
  PdmSubscores sub;
  sub.nc = collision_flag(pred, s) ? 0.0 : 1.0;

  const auto boxes = ego_boxes(pred, s.ego_length, s.ego_width);

  // drivable-area compliance: corners and center of every box inside the union
  sub.dac = 1.0;
  for (const auto& box : boxes) {
    for (const auto& corner : box.corners()) {
      if (!geom::point_in_union(corner, s.map.drivable)) sub.dac = 0.0;
    }
    if (!geom::point_in_union(box.center, s.map.drivable)) sub.dac = 0.0;
  }

  // time-to-collision: constant-velocity forward projection from each step
  sub.ttc = 1.0;
  std::vector<geom::Vec2> vel(pred.size());
  for (size_t k = 0; k < pred.size(); ++k) {
    const geom::Vec2 prev = k == 0 ? geom::Vec2{0, 0} : pred[k - 1];
    vel[k] = (pred[k] - prev) * (1.0 / scenario::kStepSeconds);
  }
  for (size_t k = 0; k < pred.size() && sub.ttc > 0; ++k) {
    const double t0 = (static_cast<double>(k) + 1.0) * scenario::kStepSeconds;
    for (double tau = kTtcStep; tau <= kTtcHorizon + 1e-9; tau += kTtcStep) {
      geom::Obb probe = boxes[k];
      probe.center = probe.center + vel[k] * tau;
      for (const auto& agent : s.agents) {
        if (geom::obb_overlap(probe, agent.obb_at(t0 + tau))) {
          sub.ttc = 0.0;
          break;
        }
      }
      if (sub.ttc == 0.0) break;
    }
  }

  // ego progress along the route
  const auto& route = s.map.route();
  const double start_s = geom::project_arclength(route, {0, 0});
  const double pred_gain = geom::project_arclength(route, pred.back()) - start_s;
  std::vector<geom::Vec2> gt(s.ego_future.begin(), s.ego_future.end());
  const double gt_gain = geom::project_arclength(route, gt.back()) - start_s;
  if (gt_gain < kMinProgress) {
    sub.ep = 1.0;
  } else {
    sub.ep = std::clamp(pred_gain / gt_gain, 0.0, 1.0);
  }

  // comfort bounds on accel, jerk, yaw rate
  sub.comf = 1.0;
  const double dt = scenario::kStepSeconds;
  std::vector<geom::Vec2> v;
  geom::Vec2 prev{0, 0};
  for (const auto& p : pred) {
    v.push_back((p - prev) * (1.0 / dt));
    prev = p;
  }
  std::vector<geom::Vec2> a;
  for (size_t i = 1; i < v.size(); ++i) a.push_back((v[i] - v[i - 1]) * (1.0 / dt));
  for (const auto& ai : a) {
    if (ai.norm() > kMaxAccel) sub.comf = 0.0;
  }
  for (size_t i = 1; i < a.size(); ++i) {
    if (((a[i] - a[i - 1]) * (1.0 / dt)).norm() > kMaxJerk) sub.comf = 0.0;
  }
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i].norm() < kYawSpeedFloor || v[i - 1].norm() < kYawSpeedFloor) continue;
    double dh = std::atan2(v[i].y, v[i].x) - std::atan2(v[i - 1].y, v[i - 1].x);
    while (dh > M_PI) dh -= 2 * M_PI;
    while (dh < -M_PI) dh += 2 * M_PI;
    if (std::fabs(dh) / dt > kMaxYawRate) sub.comf = 0.0;
  }
  return sub;
}

double pdm_aggregate(const PdmSubscores& sub) {
  return sub.nc * sub.dac * sub.ttc * (5.0 * sub.ep + 5.0 * sub.comf + 2.0) / 12.0;
}

double miou(const std::vector<uint8_t>& pred_labels, const scenario::SemanticGrid& target) {
  if (pred_labels.size() != target.labels.size()) throw InputError("miou: size mismatch");
  const int k = scenario::SemanticGrid::kClasses;
  std::vector<int64_t> inter(static_cast<size_t>(k), 0), uni(static_cast<size_t>(k), 0),
      present(static_cast<size_t>(k), 0);
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    const int p = pred_labels[i];
    const int t = target.labels[i];
    present[static_cast<size_t>(t)] = 1;
    if (p == t) {
      inter[static_cast<size_t>(p)]++;
      uni[static_cast<size_t>(p)]++;
    } else {
      uni[static_cast<size_t>(p)]++;
      uni[static_cast<size_t>(t)]++;
    }
  }
  double sum = 0;
  int count = 0;
  for (int c = 0; c < k; ++c) {
    if (!present[static_cast<size_t>(c)]) continue;
    ++count;
    sum += uni[static_cast<size_t>(c)] > 0
               ? static_cast<double>(inter[static_cast<size_t>(c)]) / static_cast<double>(uni[static_cast<size_t>(c)])
               : 0.0;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace seerdrive::eval
