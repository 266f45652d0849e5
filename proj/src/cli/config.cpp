#include "floodcast/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "floodcast/errors.hpp"
#include "floodcast/eval/sweep.hpp"
#include "floodcast/floodgen/csv.hpp"
#include "floodcast/tensor/binary_io.hpp"

namespace floodcast {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return out;
}

double to_f64(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> to_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

Entry size_entry(const std::string& key, std::function<std::size_t&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = to_u64(key, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Entry f64_entry(const std::string& key, std::function<double&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = to_f64(key, v); },
          [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); }};
}

void add_storm(std::vector<Entry>& e, const std::string& prefix, StormSettings ScenarioConfig::*storm) {
  e.push_back(size_entry(prefix + "_cells", [storm](RunConfig& c) -> std::size_t& { return (c.scenario.*storm).cells; }));
  e.push_back(f64_entry(prefix + "_peak_min", [storm](RunConfig& c) -> double& {
    return (c.scenario.*storm).peak_min_in_per_hr;
  }));
  e.push_back(f64_entry(prefix + "_peak_max", [storm](RunConfig& c) -> double& {
    return (c.scenario.*storm).peak_max_in_per_hr;
  }));
  e.push_back(f64_entry(prefix + "_radius_min", [storm](RunConfig& c) -> double& { return (c.scenario.*storm).radius_min; }));
  e.push_back(f64_entry(prefix + "_radius_max", [storm](RunConfig& c) -> double& { return (c.scenario.*storm).radius_max; }));
  e.push_back(size_entry(prefix + "_duration_min", [storm](RunConfig& c) -> std::size_t& {
    return (c.scenario.*storm).duration_min_steps;
  }));
  e.push_back(size_entry(prefix + "_duration_max", [storm](RunConfig& c) -> std::size_t& {
    return (c.scenario.*storm).duration_max_steps;
  }));
  e.push_back(size_entry(prefix + "_start_min", [storm](RunConfig& c) -> std::size_t& {
    return (c.scenario.*storm).start_min_step;
  }));
  e.push_back(size_entry(prefix + "_start_max", [storm](RunConfig& c) -> std::size_t& {
    return (c.scenario.*storm).start_max_step;
  }));
  e.push_back(f64_entry(prefix + "_noise", [storm](RunConfig& c) -> double& { return (c.scenario.*storm).noise; }));
}

std::string model_value(const ModelConfig& m, const std::string& key) {
  std::stringstream ss(m.to_text());
  std::string line;
  while (std::getline(ss, line))
    if (line.compare(0, key.size() + 1, key + "=") == 0) return line.substr(key.size() + 1);
  return {};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   c.seed = to_u64("seed", v);
                   c.model.seed = c.seed;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    e.push_back({"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = trim(v); },
                 [](const RunConfig& c) { return c.data_dir; }});
    e.push_back(size_entry("threads", [](RunConfig& c) -> std::size_t& { return c.threads; }));

    e.push_back(size_entry("n_sensors", [](RunConfig& c) -> std::size_t& { return c.scenario.n_sensors; }));
    e.push_back(size_entry("train_events", [](RunConfig& c) -> std::size_t& { return c.scenario.train_events; }));
    e.push_back(size_entry("test_events", [](RunConfig& c) -> std::size_t& { return c.scenario.test_events; }));
    e.push_back(size_entry("event_steps", [](RunConfig& c) -> std::size_t& { return c.scenario.event_steps; }));
    e.push_back(f64_entry("runoff_gain", [](RunConfig& c) -> double& { return c.scenario.hydro.runoff_gain; }));
    e.push_back(f64_entry("discharge_per_ft2", [](RunConfig& c) -> double& { return c.scenario.hydro.discharge_per_ft2; }));
    e.push_back(f64_entry("spill_rate", [](RunConfig& c) -> double& { return c.scenario.hydro.spill_rate; }));
    e.push_back(f64_entry("initial_level_min", [](RunConfig& c) -> double& { return c.scenario.hydro.initial_level_min; }));
    e.push_back(f64_entry("initial_level_max", [](RunConfig& c) -> double& { return c.scenario.hydro.initial_level_max; }));
    e.push_back(f64_entry("bank_height_min_ft", [](RunConfig& c) -> double& { return c.scenario.graph.bank_height_min_ft; }));
    e.push_back(f64_entry("bank_height_max_ft", [](RunConfig& c) -> double& { return c.scenario.graph.bank_height_max_ft; }));
    e.push_back(f64_entry("cross_section_min_ft2", [](RunConfig& c) -> double& {
      return c.scenario.graph.cross_section_min_ft2;
    }));
    e.push_back(f64_entry("cross_section_max_ft2", [](RunConfig& c) -> double& {
      return c.scenario.graph.cross_section_max_ft2;
    }));
    e.push_back(f64_entry("impermeable_min_pct", [](RunConfig& c) -> double& { return c.scenario.graph.impermeable_min_pct; }));
    e.push_back(f64_entry("impermeable_max_pct", [](RunConfig& c) -> double& { return c.scenario.graph.impermeable_max_pct; }));
    e.push_back(size_entry("max_degree", [](RunConfig& c) -> std::size_t& { return c.scenario.graph.max_degree; }));
    e.push_back(f64_entry("extra_edge_probability", [](RunConfig& c) -> double& {
      return c.scenario.graph.extra_edge_probability;
    }));
    add_storm(e, "train_storm", &ScenarioConfig::train_storm);
    add_storm(e, "test_storm", &ScenarioConfig::test_storm);
    e.push_back(f64_entry("train_negatives_per_positive", [](RunConfig& c) -> double& {
      return c.scenario.train_negatives_per_positive;
    }));
    e.push_back(f64_entry("test_negatives_per_positive", [](RunConfig& c) -> double& {
      return c.scenario.test_negatives_per_positive;
    }));

    e.push_back(size_entry("window_stride", [](RunConfig& c) -> std::size_t& { return c.window_stride; }));
    e.push_back(f64_entry("val_fraction", [](RunConfig& c) -> double& { return c.val_fraction; }));
    e.push_back({"zero_future_rain", [](RunConfig& c, const std::string& v) { c.zero_future_rain = to_bool("zero_future_rain", v); },
                 [](const RunConfig& c) { return std::string(c.zero_future_rain ? "true" : "false"); }});
    e.push_back({"train_event_names", [](RunConfig& c, const std::string& v) { c.train_event_names = to_list(v); },
                 [](const RunConfig& c) { return join(c.train_event_names, [](const std::string& s) { return s; }); }});
    e.push_back({"test_event_names", [](RunConfig& c, const std::string& v) { c.test_event_names = to_list(v); },
                 [](const RunConfig& c) { return join(c.test_event_names, [](const std::string& s) { return s; }); }});

    for (const auto& k : model_config_keys()) {
      if (k == "seed") continue;  // shared with the run seed above
      e.push_back({k,
                   [k](RunConfig& c, const std::string& v) { apply_model_key(c.model, k, v); },
                   [k](const RunConfig& c) { return model_value(c.model, k); }});
    }

    e.push_back({"sweep_weights",
                 [](RunConfig& c, const std::string& v) {
                   c.sweep_weights.clear();
                   for (const auto& item : to_list(v)) c.sweep_weights.push_back(to_f64("sweep_weights", item));
                 },
                 [](const RunConfig& c) { return join(c.sweep_weights, [](double w) { return format_double(w); }); }});
    e.push_back(size_entry("sweep_runs", [](RunConfig& c) -> std::size_t& { return c.sweep_runs; }));
    e.push_back({"compare_variants",
                 [](RunConfig& c, const std::string& v) {
                   c.compare_variants.clear();
                   for (const auto& item : to_list(v)) c.compare_variants.push_back(parse_variant(item));
                 },
                 [](const RunConfig& c) {
                   return join(c.compare_variants, [](Variant x) { return std::string(variant_name(x)); });
                 }});
    e.push_back(size_entry("compare_runs", [](RunConfig& c) -> std::size_t& { return c.compare_runs; }));
    e.push_back({"predict_event", [](RunConfig& c, const std::string& v) { c.predict_event = trim(v); },
                 [](const RunConfig& c) { return c.predict_event; }});
    e.push_back(size_entry("predict_interval", [](RunConfig& c) -> std::size_t& { return c.predict_interval; }));
    e.push_back(f64_entry("predict_threshold", [](RunConfig& c) -> double& { return c.predict_threshold; }));
    return e;
  }();
  return entries;
}

}  // namespace

RunConfig::RunConfig() : sweep_weights(default_weight_grid(true)) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const auto& e : registry()) {
    if (e.key == k) {
      e.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + k + "'");
}

void RunConfig::apply_text(const std::string& text, const std::string& source) {
  std::stringstream ss(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(no) + ": expected key=value, got '" + trim(line) + "'");
    }
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::string& path) { apply_text(read_text_file(path), path); }

std::string RunConfig::canonical_text() const {
  std::string s;
  for (const auto& e : registry()) s += e.key + "=" + e.get(*this) + "\n";
  return s;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> k;
  for (const auto& e : registry()) k.push_back(e.key);
  return k;
}

}  // namespace floodcast
