#include "floodcast/floodgen/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "floodcast/errors.hpp"

namespace floodcast {

namespace {

void validate(const SensorGraph& graph, const EventSpec& spec) {
  if (spec.steps < kMinEventSteps || spec.steps > kMaxEventSteps) {
    throw ConfigError("event " + spec.name + ": duration must be 3-5 days (" + std::to_string(kMinEventSteps) + "-" +
                      std::to_string(kMaxEventSteps) + " steps), got " + std::to_string(spec.steps));
  }
  for (const auto& c : spec.storm.cells) {
    if (c.peak_in_per_hr < 0.0) throw ConfigError("storm intensity must be non-negative");
    if (!c.uniform && !(c.radius > 0.0)) throw ConfigError("storm radius must be positive");
    for (auto s : c.only_sensors)
      if (s >= graph.size()) throw ConfigError("storm refers to an unknown sensor index");
  }
}

double cell_intensity(const StormCell& c, const SensorNode& n, std::size_t sensor, std::size_t t) {
  if (t < c.start_step || t >= c.start_step + c.duration_steps) return 0.0;
  if (!c.only_sensors.empty() &&
      std::find(c.only_sensors.begin(), c.only_sensors.end(), sensor) == c.only_sensors.end()) {
    return 0.0;
  }
  if (c.uniform) return c.peak_in_per_hr;
  const double dx = n.x - c.center_x, dy = n.y - c.center_y;
  const double spatial = std::exp(-(dx * dx + dy * dy) / (2.0 * c.radius * c.radius));
  const double phase = (static_cast<double>(t - c.start_step) + 0.5) / static_cast<double>(c.duration_steps);
  return c.peak_in_per_hr * spatial * std::sin(std::numbers::pi * phase);
}

}  // namespace

std::vector<std::vector<double>> storm_rainfall(const SensorGraph& graph, const EventSpec& spec, RngState& rng) {
  validate(graph, spec);
  std::vector<std::vector<double>> rain(graph.size(), std::vector<double>(spec.steps, 0.0));
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (std::size_t t = 0; t < spec.steps; ++t) {
      double rate = 0.0;
      for (const auto& c : spec.storm.cells) rate += cell_intensity(c, graph.node(i), i, t);
      if (rate <= 0.0) continue;
      const double jitter = 1.0 + spec.storm.noise * (2.0 * rng.uniform() - 1.0);
      rain[i][t] = std::max(0.0, rate * jitter) * kStepHours;
    }
  return rain;
}

EventTrace route_rainfall(const SensorGraph& graph, const EventSpec& spec, std::vector<std::vector<double>> rainfall,
                          const HydroParams& hydro, RngState& rng) {
  const std::size_t n = graph.size();
  if (rainfall.size() != n) throw DimensionError("rainfall field has wrong sensor count");
  for (const auto& r : rainfall)
    if (r.size() != spec.steps) throw DimensionError("rainfall field has wrong step count");
  const double dt = kStepHours;
  if (hydro.spill_rate * dt > 1.0 || hydro.spill_rate < 0.0) throw ConfigError("spill_rate * dt must lie in [0, 1]");
  if (hydro.discharge_per_ft2 < 0.0) throw ConfigError("discharge coefficient must be non-negative");

  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = hydro.discharge_per_ft2 * graph.node(i).cross_section_ft2;
    if (k[i] * dt > 1.0) throw ConfigError("discharge rate too large for a 30-minute step at " + graph.node(i).id);
  }

  EventTrace trace;
  trace.name = spec.name;
  trace.start = spec.start;
  trace.rainfall = std::move(rainfall);
  trace.level.assign(n, std::vector<double>(spec.steps, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    trace.level[i][0] =
        graph.node(i).bank_height_ft * rng.uniform(hydro.initial_level_min, hydro.initial_level_max);
  }

  std::vector<double> spill(n), inflow(n);
  for (std::size_t t = 1; t < spec.steps; ++t) {
    std::fill(inflow.begin(), inflow.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = trace.level[i][t - 1];
      spill[i] = hydro.spill_rate * std::max(prev - graph.node(i).bank_height_ft, 0.0);
      const auto& succ = graph.successors(i);
      for (auto s : succ) inflow[s] += spill[i] / static_cast<double>(succ.size());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = graph.node(i);
      const double prev = trace.level[i][t - 1];
      const double runoff = trace.rainfall[i][t] / dt * node.impermeable_pct / 100.0 * hydro.runoff_gain;
      const double next = prev + dt * (runoff + inflow[i] - k[i] * std::max(prev, 0.0) - spill[i]);
      if (!std::isfinite(next)) throw SimulationDivergenceError(t, "non-finite level at sensor " + node.id);
      trace.level[i][t] = next;
    }
  }
  return trace;
}

EventTrace simulate_event(const SensorGraph& graph, const EventSpec& spec, const HydroParams& hydro, RngState& rng) {
  RngState rain_rng = rng.split(1);
  RngState state_rng = rng.split(2);
  rng.next_u64();
  auto rain = storm_rainfall(graph, spec, rain_rng);
  return route_rainfall(graph, spec, std::move(rain), hydro, state_rng);
}

}  // namespace floodcast
