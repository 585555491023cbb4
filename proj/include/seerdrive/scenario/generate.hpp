#pragma once

#include <map>
#include <string>

#include "seerdrive/scenario/types.hpp"

namespace seerdrive::scenario {

// Scenario templates draw constant-curvature ego arcs; agents follow the lane
// graph at constant speed (leads may decelerate on stop templates). Every
// quantity is a pure function of (seed, config) and is snapped to f32 so the
// on-disk record round-trips bit-exactly.
struct GenConfig {
  std::map<std::string, double> template_mix{
      {"straight", 0.4}, {"left", 0.2}, {"right", 0.2}, {"stop", 0.2}};
  double lane_offset = 3.5;        // adjacent lane lateral offset, meters
  double drivable_halfwidth = 5.5;
  double oncoming_prob = 0.5;      // chance of an oncoming agent
  double extra_agent_prob = 0.3;   // chance of a second far lead

  std::string canonical_json() const;
  uint64_t hash() const;
  void validate() const;  // throws ConfigError on unknown template names

  static GenConfig from_json_text(const std::string& text);
};

Scenario generate_scenario(int64_t seed, const GenConfig& config);

}  // namespace seerdrive::scenario
