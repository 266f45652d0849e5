#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "floodcast/floodgen/graph.hpp"
#include "floodcast/floodgen/timestamp.hpp"
#include "floodcast/tensor/rng.hpp"

namespace floodcast {

inline constexpr double kStepHours = 0.5;
inline constexpr std::size_t kMinEventSteps = 3 * 48;  // 3 days of 30-minute steps
inline constexpr std::size_t kMaxEventSteps = 5 * 48;

// One rain cell. Intensity at a sensor is
//   peak * exp(-d^2 / 2 radius^2) * sin(pi * (t - start) / duration)
// during [start, start + duration), times multiplicative noise.
struct StormCell {
  double peak_in_per_hr = 1.0;
  double center_x = 50.0;
  double center_y = 30.0;
  double radius = 40.0;
  std::size_t start_step = 0;
  std::size_t duration_steps = 48;
  // Constant intensity everywhere for the whole duration (no spatial or temporal shape).
  bool uniform = false;
  // Restrict rain to these sensor indices when non-empty.
  std::vector<std::size_t> only_sensors;
};

struct StormParams {
  std::vector<StormCell> cells;
  double noise = 0.2;  // relative amplitude of per-sensor, per-step jitter
};

// Linear-reservoir routing in stage units (feet), integrated with explicit Euler:
//   level += dt * (runoff + upstream spill share - k * max(level, 0) - spill)
// runoff = rain_rate * impermeable/100 * runoff_gain, k = discharge_per_ft2 * area,
// spill = spill_rate * max(level - bank, 0), split evenly across successors.
struct HydroParams {
  double runoff_gain = 14.0;            // ft of stage per inch of effective rain
  double discharge_per_ft2 = 2.5e-5;    // 1/h per ft^2 of cross-section
  double spill_rate = 0.6;              // 1/h applied to the excess over bank top
  double initial_level_min = 0.05;      // fraction of bank height
  double initial_level_max = 0.30;
};

struct EventSpec {
  std::string name;
  Timestamp start = 0;
  std::size_t steps = kMinEventSteps;
  StormParams storm;
};

// Per-sensor series on a uniform 30-minute axis. rainfall[i][t] is the amount
// (inches) recorded over the half hour ending at step t; level[i][t] is the
// stage in feet at step t.
struct EventTrace {
  std::string name;
  Timestamp start = 0;
  std::vector<std::vector<double>> rainfall;
  std::vector<std::vector<double>> level;

  std::size_t sensors() const { return level.size(); }
  std::size_t steps() const { return level.empty() ? 0 : level.front().size(); }
  Timestamp time_at(std::size_t t) const { return start + static_cast<Timestamp>(t) * kStepMinutes; }

  friend bool operator==(const EventTrace&, const EventTrace&) = default;
};

std::vector<std::vector<double>> storm_rainfall(const SensorGraph& graph, const EventSpec& spec, RngState& rng);

// Integrates the routing model over a given rainfall field (sensors x steps).
EventTrace route_rainfall(const SensorGraph& graph, const EventSpec& spec, std::vector<std::vector<double>> rainfall,
                          const HydroParams& hydro, RngState& rng);

EventTrace simulate_event(const SensorGraph& graph, const EventSpec& spec, const HydroParams& hydro, RngState& rng);

}  // namespace floodcast
