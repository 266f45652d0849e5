#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "floodcast/floodgen/graph.hpp"
#include "floodcast/floodgen/simulate.hpp"

namespace floodcast {

// Ranges for the random rain cells of one event.
struct StormSettings {
  std::size_t cells = 4;
  double peak_min_in_per_hr = 0.22;
  double peak_max_in_per_hr = 0.34;
  double radius_min = 50.0;
  double radius_max = 90.0;
  std::size_t duration_min_steps = 12;
  std::size_t duration_max_steps = 36;
  // Cells start uniformly in [start_min, start_max] (clipped to the event).
  std::size_t start_min_step = 80;
  std::size_t start_max_step = 150;
  double noise = 0.2;
};

// A graph plus groups of training and held-out events.
struct ScenarioConfig {
  std::size_t n_sensors = 40;
  std::size_t train_events = 3;
  std::size_t test_events = 1;
  std::size_t event_steps = 192;
  GraphRanges graph;
  HydroParams hydro;
  StormSettings train_storm;
  StormSettings test_storm{4, 0.18, 0.26, 50.0, 90.0, 12, 36, 80, 150, 0.2};
  // When positive, every storm of a group is scaled by one common factor so
  // that the group's windowed samples reach this negatives-per-positive ratio.
  double train_negatives_per_positive = 3.5;
  double test_negatives_per_positive = 15.77;
  Timestamp first_start = make_timestamp(2020, 6, 1);
  // Days between consecutive event starts.
  std::size_t event_spacing_days = 14;

  void validate() const;
};

struct Scenario {
  SensorGraph graph;
  std::vector<EventTrace> train;  // named train1, train2, ...
  std::vector<EventTrace> test;   // named test1, ...
  double train_intensity_scale = 1.0;
  double test_intensity_scale = 1.0;
};

// Label counts over every stride-1 window of the traces, as build_dataset would produce.
struct LabelCount {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};
LabelCount count_labels(const SensorGraph& graph, const std::vector<EventTrace>& traces);

StormParams random_storm(const StormSettings& s, const GraphRanges& extent, std::size_t steps, RngState& rng);

Scenario simulate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace floodcast
