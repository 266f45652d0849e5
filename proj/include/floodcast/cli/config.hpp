#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floodcast/floodgen/scenario.hpp"
#include "floodcast/nn/model.hpp"

namespace floodcast {

// Every setting of every command. Sources are applied in order: defaults,
// config file, then --seed and --set flags; later sources win.
struct RunConfig {
  std::uint64_t seed = 0;
  // Where prepared data lives; empty means the command's --out directory.
  std::string data_dir;
  std::size_t threads = 0;

  ScenarioConfig scenario;

  std::size_t window_stride = 1;
  double val_fraction = 0.2;
  bool zero_future_rain = false;
  std::vector<std::string> train_event_names{"train1", "train2", "train3"};
  std::vector<std::string> test_event_names{"test1"};

  ModelConfig model;

  std::vector<double> sweep_weights;
  std::size_t sweep_runs = 10;
  std::vector<Variant> compare_variants{Variant::Hybrid, Variant::FastGrnnOnly, Variant::FcnOnly};
  std::size_t compare_runs = 3;

  std::string predict_event = "test1";
  std::size_t predict_interval = 4;
  // Negative: use the threshold stored in the model.
  double predict_threshold = -1.0;

  RunConfig();

  // ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  // Flat text: one key=value per line, '#' starts a comment.
  void apply_text(const std::string& text, const std::string& source = "config");
  void apply_file(const std::string& path);

  // All keys in a fixed order with their current values.
  std::string canonical_text() const;
  std::uint64_t hash() const;

  static std::vector<std::string> keys();
};

}  // namespace floodcast
