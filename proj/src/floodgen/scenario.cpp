#include "floodcast/floodgen/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "floodcast/errors.hpp"
#include "floodcast/floodgen/dataset.hpp"

namespace floodcast {

void ScenarioConfig::validate() const {
  if (n_sensors < 2) throw ConfigError("n_sensors must be at least 2, got " + std::to_string(n_sensors));
  if (train_events == 0) throw ConfigError("train_events must be positive");
  if (event_steps < kMinEventSteps || event_steps > kMaxEventSteps) {
    throw ConfigError("event_steps must lie in [" + std::to_string(kMinEventSteps) + ", " +
                      std::to_string(kMaxEventSteps) + "]");
  }
  for (const auto* s : {&train_storm, &test_storm}) {
    if (s->peak_min_in_per_hr < 0.0 || s->peak_max_in_per_hr < s->peak_min_in_per_hr) {
      throw ConfigError("storm peak range must satisfy 0 <= min <= max");
    }
    if (!(s->radius_min > 0.0) || s->radius_max < s->radius_min) throw ConfigError("storm radius range invalid");
    if (s->duration_min_steps == 0 || s->duration_max_steps < s->duration_min_steps) {
      throw ConfigError("storm duration range invalid");
    }
    if (s->start_max_step < s->start_min_step) throw ConfigError("storm start range invalid");
    if (s->noise < 0.0 || s->noise > 1.0) throw ConfigError("storm noise must lie in [0, 1]");
  }
  if (train_negatives_per_positive < 0.0 || test_negatives_per_positive < 0.0) {
    throw ConfigError("target ratios must be non-negative (0 disables calibration)");
  }
}

StormParams random_storm(const StormSettings& s, const GraphRanges& extent, std::size_t steps, RngState& rng) {
  StormParams p;
  p.noise = s.noise;
  for (std::size_t c = 0; c < s.cells; ++c) {
    StormCell cell;
    cell.peak_in_per_hr = rng.uniform(s.peak_min_in_per_hr, s.peak_max_in_per_hr);
    cell.center_x = rng.uniform(0.0, extent.extent_x);
    cell.center_y = rng.uniform(0.0, extent.extent_y);
    cell.radius = rng.uniform(s.radius_min, s.radius_max);
    cell.duration_steps = s.duration_min_steps + rng.below(s.duration_max_steps - s.duration_min_steps + 1);
    const std::size_t hi = std::min(s.start_max_step, steps > 1 ? steps - 1 : 0);
    const std::size_t lo = std::min(s.start_min_step, hi);
    cell.start_step = lo + rng.below(hi - lo + 1);
    p.cells.push_back(cell);
  }
  return p;
}

LabelCount count_labels(const SensorGraph& graph, const std::vector<EventTrace>& traces) {
  LabelCount c;
  for (const auto& tr : traces) {
    if (tr.steps() < kWindowSteps + kHorizonSteps) continue;
    for (std::size_t s = 0; s < graph.size(); ++s)
      for (std::size_t t = kWindowSteps - 1; t + kHorizonSteps < tr.steps(); ++t) {
        (tr.level[s][t + kHorizonSteps] > graph.node(s).bank_height_ft ? c.positives : c.negatives)++;
      }
  }
  return c;
}

namespace {

struct GroupPlan {
  std::vector<EventSpec> specs;
  std::vector<RngState> sim_rngs;
};

std::vector<EventTrace> run_group(const SensorGraph& graph, const GroupPlan& plan, const HydroParams& hydro,
                                  double scale) {
  std::vector<EventTrace> out;
  for (std::size_t e = 0; e < plan.specs.size(); ++e) {
    EventSpec spec = plan.specs[e];
    for (auto& c : spec.storm.cells) c.peak_in_per_hr *= scale;
    RngState rng = plan.sim_rngs[e];
    out.push_back(simulate_event(graph, spec, hydro, rng));
  }
  return out;
}

// Bisection on log(scale); the routing is monotone in rainfall so the
// positive count never decreases as the scale grows.
double calibrate_scale(const SensorGraph& graph, const GroupPlan& plan, const HydroParams& hydro, double target) {
  const double goal = std::log(target);
  auto error = [&](double log_scale) {
    const auto c = count_labels(graph, run_group(graph, plan, hydro, std::exp(log_scale)));
    if (c.positives == 0) return std::numeric_limits<double>::infinity();
    if (c.negatives == 0) return -std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(c.negatives) / static_cast<double>(c.positives)) - goal;
  };
  double lo = std::log(1.0 / 64.0), hi = std::log(64.0);
  double best = 0.0, best_err = std::abs(error(0.0));
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double e = error(mid);
    if (std::abs(e) < best_err) {
      best_err = std::abs(e);
      best = mid;
    }
    if (e > 0.0) lo = mid;  // too few positives: more rain
    else hi = mid;
  }
  return std::exp(best);
}

}  // namespace

Scenario simulate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const RngState root(seed);
  RngState graph_rng = root.split(1);
  Scenario sc;
  sc.graph = generate_graph(cfg.n_sensors, graph_rng, cfg.graph);
  GroupPlan train, test;
  const std::size_t total = cfg.train_events + cfg.test_events;
  for (std::size_t e = 0; e < total; ++e) {
    const bool is_train = e < cfg.train_events;
    RngState storm_rng = root.split(100 + e);
    EventSpec spec;
    spec.name = is_train ? "train" + std::to_string(e + 1) : "test" + std::to_string(e - cfg.train_events + 1);
    spec.start = cfg.first_start + static_cast<Timestamp>(e * cfg.event_spacing_days) * 24 * 60;
    spec.steps = cfg.event_steps;
    spec.storm = random_storm(is_train ? cfg.train_storm : cfg.test_storm, cfg.graph, cfg.event_steps, storm_rng);
    auto& group = is_train ? train : test;
    group.specs.push_back(std::move(spec));
    group.sim_rngs.push_back(root.split(200 + e));
  }
  if (cfg.train_negatives_per_positive > 0.0) {
    sc.train_intensity_scale = calibrate_scale(sc.graph, train, cfg.hydro, cfg.train_negatives_per_positive);
  }
  if (!test.specs.empty() && cfg.test_negatives_per_positive > 0.0) {
    sc.test_intensity_scale = calibrate_scale(sc.graph, test, cfg.hydro, cfg.test_negatives_per_positive);
  }
  sc.train = run_group(sc.graph, train, cfg.hydro, sc.train_intensity_scale);
  sc.test = run_group(sc.graph, test, cfg.hydro, sc.test_intensity_scale);
  return sc;
}

}  // namespace floodcast
