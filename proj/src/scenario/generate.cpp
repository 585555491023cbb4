#include "seerdrive/scenario/generate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/rng.hpp"
#include "seerdrive/core/serialize.hpp"
#include "seerdrive/core/tensor.hpp"

namespace seerdrive::scenario {

namespace {

constexpr double kRouteBack = 15.0;     // meters of route behind the ego
constexpr double kRouteAhead = 70.0;    // desired meters ahead (arcs may cap it)
constexpr double kRouteSample = 1.0;    // polyline sampling step
constexpr double kMaxEgoSpeed = 7.0;    // keeps the 4 s ego pose inside the grid
constexpr double kSafetyMargin = 0.8;   // obb inflation in the spawn-check loop

// Constant-curvature path in the t=0 ego frame (heading +x at s=0).
geom::Vec2 arc_point(double curvature, double s) {
  if (std::fabs(curvature) < 1e-12) return {s, 0.0};
  return {std::sin(curvature * s) / curvature, (1.0 - std::cos(curvature * s)) / curvature};
}

double arc_heading(double curvature, double s) { return curvature * s; }

geom::Vec2 arc_normal(double curvature, double s) {
  const double h = arc_heading(curvature, s);
  return {-std::sin(h), std::cos(h)};
}

struct SpeedProfile {
  double v0 = 5.0;
  double accel = 0.0;       // signed, applied until v hits limits
  double stop_time = -1.0;  // stop templates only: v reaches 0 here

  double distance_at(double t) const {
    if (stop_time > 0.0 && t >= stop_time) {
      return v0 * stop_time + 0.5 * accel * stop_time * stop_time;
    }
    double v_end = v0 + accel * t;
    if (v_end < 0.0) {
      const double ts = v0 / -accel;
      return v0 * ts + 0.5 * accel * ts * ts;
    }
    if (v_end > kMaxEgoSpeed) {
      const double ts = (kMaxEgoSpeed - v0) / accel;
      return v0 * ts + 0.5 * accel * ts * ts + kMaxEgoSpeed * (t - ts);
    }
    return v0 * t + 0.5 * accel * t * t;
  }
};

Template pick_template(int64_t seed, const GenConfig& cfg) {
  // Golden-ratio sequence: equidistributed over contiguous seed ranges, so
  // corpus template frequencies track the configured mix closely.
  const double u = std::fmod(static_cast<double>(seed) * 0.6180339887498949 + 0.05, 1.0);
  static const char* order[] = {"straight", "left", "right", "stop"};
  double total = 0.0;
  for (const char* name : order) {
    auto it = cfg.template_mix.find(name);
    if (it != cfg.template_mix.end()) total += it->second;
  }
  double acc = 0.0;
  for (const char* name : order) {
    auto it = cfg.template_mix.find(name);
    if (it == cfg.template_mix.end()) continue;
    acc += it->second / total;
    if (u < acc) {
      if (name == order[0]) return Template::Straight;
      if (name == order[1]) return Template::Left;
      if (name == order[2]) return Template::Right;
      return Template::Stop;
    }
  }
  return Template::Straight;
}

AgentTrack make_lane_agent(double curvature, double lateral, double s0, double speed,
                           bool oncoming, double s_min, double s_max, Rng& rng) {
  AgentTrack a;
  a.length = rng.uniform(4.2, 5.0);
  a.width = rng.uniform(1.8, 2.1);
  a.positions.resize(kTrackSteps);
  a.headings.resize(kTrackSteps);
  for (int i = 0; i < kTrackSteps; ++i) {
    const double t = i * kStepSeconds;
    double s = oncoming ? s0 - speed * t : s0 + speed * t;
    s = std::clamp(s, s_min, s_max);  // road ends are hard stops
    const geom::Vec2 base = arc_point(curvature, s);
    const geom::Vec2 n = arc_normal(curvature, s);
    a.positions[static_cast<size_t>(i)] = base + n * lateral;
    a.headings[static_cast<size_t>(i)] =
        arc_heading(curvature, s) + (oncoming ? M_PI : 0.0);
  }
  return a;
}

bool conflicts_with_ego(const Scenario& s, const AgentTrack& agent) {
  for (double t = 0.0; t <= kHorizonSeconds + 1e-9; t += 0.1) {
    geom::Obb ego = s.ego_obb(t);
    ego.length += kSafetyMargin;
    ego.width += kSafetyMargin;
    if (geom::obb_overlap(ego, agent.obb_at(t))) return true;
  }
  return false;
}

void snap_scenario(Scenario& s) {
  auto snap_vec = [](geom::Vec2& v) {
    v.x = snap_to_f32(v.x);
    v.y = snap_to_f32(v.y);
  };
  for (auto& poly : s.map.drivable)
    for (auto& p : poly) snap_vec(p);
  for (auto& line : s.map.centerlines)
    for (auto& p : line) snap_vec(p);
  for (auto& a : s.agents) {
    for (auto& p : a.positions) snap_vec(p);
    for (auto& h : a.headings) h = snap_to_f32(h);
    a.length = snap_to_f32(a.length);
    a.width = snap_to_f32(a.width);
  }
  snap_vec(s.ego_status.velocity);
  snap_vec(s.ego_status.acceleration);
  for (auto& c : s.ego_status.command) c = snap_to_f32(c);
  for (auto& p : s.ego_future) snap_vec(p);
  s.ego_length = snap_to_f32(s.ego_length);
  s.ego_width = snap_to_f32(s.ego_width);
}

}  // namespace

void GenConfig::validate() const {
  double total = 0.0;
  for (const auto& [name, w] : template_mix) {
    if (name != "straight" && name != "left" && name != "right" && name != "stop") {
      throw ConfigError("unknown template name: " + name);
    }
    if (w < 0.0) throw ConfigError("negative template weight: " + name);
    total += w;
  }
  if (total <= 0.0) throw ConfigError("template mix weights sum to zero");
}

std::string GenConfig::canonical_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json mix;
  for (const auto& [name, w] : template_mix) mix[name] = w;  // std::map is sorted
  j["template_mix"] = mix;
  j["lane_offset"] = lane_offset;
  j["drivable_halfwidth"] = drivable_halfwidth;
  j["oncoming_prob"] = oncoming_prob;
  j["extra_agent_prob"] = extra_agent_prob;
  return j.dump();
}

uint64_t GenConfig::hash() const { return io::fnv1a(canonical_json()); }

GenConfig GenConfig::from_json_text(const std::string& text) {
  GenConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad generator config json: ") + e.what());
  }
  if (j.contains("template_mix")) {
    cfg.template_mix.clear();
    for (auto it = j["template_mix"].begin(); it != j["template_mix"].end(); ++it) {
      cfg.template_mix[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("lane_offset")) cfg.lane_offset = j["lane_offset"].get<double>();
  if (j.contains("drivable_halfwidth")) cfg.drivable_halfwidth = j["drivable_halfwidth"].get<double>();
  if (j.contains("oncoming_prob")) cfg.oncoming_prob = j["oncoming_prob"].get<double>();
  if (j.contains("extra_agent_prob")) cfg.extra_agent_prob = j["extra_agent_prob"].get<double>();
  cfg.validate();
  return cfg;
}

Scenario generate_scenario(int64_t seed, const GenConfig& config) {
  if (seed < 0) throw ConfigError("seed must be >= 0");
  config.validate();

  Scenario s;
  s.seed = seed;
  const Template tmpl = pick_template(seed, config);
  s.template_id = static_cast<int32_t>(tmpl);

  Rng ego_rng(static_cast<uint64_t>(seed), 1);
  Rng agent_rng(static_cast<uint64_t>(seed), 2);

  // --- ego path ---
  double curvature = 0.0;
  SpeedProfile prof;
  switch (tmpl) {
    case Template::Straight: {
      prof.v0 = ego_rng.uniform(2.5, kMaxEgoSpeed);
      const double kind = ego_rng.uniform();
      if (kind < 0.25 && prof.v0 < 6.4) {
        prof.accel = ego_rng.uniform(0.2, std::min(1.2, (kMaxEgoSpeed - prof.v0) / 4.0));
      } else if (kind < 0.5 && prof.v0 > 3.0) {
        prof.accel = -ego_rng.uniform(0.2, (prof.v0 - 1.0) / 4.0);
      }
      break;
    }
    case Template::Left:
    case Template::Right: {
      const double mag = ego_rng.uniform(0.03, 0.09);
      curvature = tmpl == Template::Left ? mag : -mag;
      // comfort bounds: lateral accel v^2*k <= 6, yaw rate v*k <= 1.3
      const double vmax = std::min({kMaxEgoSpeed, std::sqrt(6.0 / mag), 1.3 / mag});
      prof.v0 = ego_rng.uniform(2.5, vmax);
      break;
    }
    case Template::Stop: {
      prof.v0 = ego_rng.uniform(3.0, kMaxEgoSpeed);
      const double ts = ego_rng.uniform(std::max(1.5, prof.v0 / 2.8), 3.2);
      prof.accel = -prof.v0 / ts;
      prof.stop_time = ts;
      break;
    }
  }

  for (int k = 0; k < kHorizonSteps; ++k) {
    const double t = (k + 1) * kStepSeconds;
    s.ego_future[static_cast<size_t>(k)] = arc_point(curvature, prof.distance_at(t));
  }
  s.ego_status.velocity = {prof.v0, 0.0};
  s.ego_status.acceleration = {prof.accel, prof.v0 * prof.v0 * curvature};
  if (tmpl == Template::Left) {
    s.ego_status.command = {1, 0, 0};
  } else if (tmpl == Template::Right) {
    s.ego_status.command = {0, 0, 1};
  } else {
    s.ego_status.command = {0, 1, 0};
  }

  // --- map: route band with one adjacent lane ---
  double s_max = kRouteAhead;
  if (std::fabs(curvature) > 1e-12) {
    // Cap the band's total angular sweep (including the backward stretch) well
    // below a full circle so the polygon cannot self-intersect.
    s_max = std::min(s_max, 4.4 / std::fabs(curvature) - kRouteBack);
  }
  const double s_min = -kRouteBack;
  const bool adjacent_left = ego_rng.uniform() < 0.5;
  const double adj = (adjacent_left ? 1.0 : -1.0) * config.lane_offset;

  geom::Polyline route, adjacent, left_edge, right_edge;
  for (double sv = s_min; sv <= s_max + 1e-9; sv += kRouteSample) {
    const geom::Vec2 p = arc_point(curvature, sv);
    const geom::Vec2 n = arc_normal(curvature, sv);
    route.push_back(p);
    adjacent.push_back(p + n * adj);
  }
  // The band runs one sample past the lane ends so lane endpoints are strictly
  // interior even after f32 snapping.
  for (double sv = s_min - kRouteSample; sv <= s_max + kRouteSample + 1e-9; sv += kRouteSample) {
    const geom::Vec2 p = arc_point(curvature, sv);
    const geom::Vec2 n = arc_normal(curvature, sv);
    left_edge.push_back(p + n * config.drivable_halfwidth);
    right_edge.push_back(p + n * (-config.drivable_halfwidth));
  }
  geom::Polygon band = left_edge;
  band.insert(band.end(), right_edge.rbegin(), right_edge.rend());
  s.map.drivable.push_back(std::move(band));
  s.map.centerlines.push_back(std::move(route));
  s.map.centerlines.push_back(std::move(adjacent));
  s.map.route_index = 0;

  // --- agents ---
  const double lead_speed_cap = std::max(1.0, (s_max - 30.0) / kHorizonSeconds);
  auto add_lead = [&](double spawn_lo, double spawn_hi, double speed) {
    double s0 = agent_rng.uniform(spawn_lo, spawn_hi);
    for (int attempt = 0; attempt < 12; ++attempt) {
      AgentTrack cand = make_lane_agent(curvature, 0.0, s0, speed, false, s_min, s_max, agent_rng);
      if (!conflicts_with_ego(s, cand)) {
        s.agents.push_back(std::move(cand));
        return;
      }
      s0 += 2.5;
    }
  };

  if (tmpl == Template::Stop) {
    add_lead(22.0, 28.0, 0.0);  // parked vehicle the ego is stopping for
  } else {
    const double speed = std::min({prof.v0 * agent_rng.uniform(0.9, 1.3), 8.5, lead_speed_cap});
    add_lead(12.0, 25.0, speed);
  }
  if (agent_rng.uniform() < config.oncoming_prob) {
    const double speed = agent_rng.uniform(3.0, 8.0);
    const double s0 = agent_rng.uniform(35.0, std::max(36.0, s_max - 2.0));
    AgentTrack cand = make_lane_agent(curvature, adj, s0, speed, true, s_min, s_max, agent_rng);
    if (!conflicts_with_ego(s, cand)) s.agents.push_back(std::move(cand));
  }
  if (agent_rng.uniform() < config.extra_agent_prob) {
    const double speed = std::min(agent_rng.uniform(2.0, 7.0), lead_speed_cap);
    add_lead(32.0, std::max(33.0, s_max - 10.0), speed);
  }

  snap_scenario(s);
  return s;
}

}  // namespace seerdrive::scenario
