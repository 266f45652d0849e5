#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "floodcast/floodgen/graph.hpp"
#include "floodcast/floodgen/simulate.hpp"
#include "floodcast/floodgen/timestamp.hpp"
#include "floodcast/tensor/rng.hpp"
#include "floodcast/tensor/tensor.hpp"

namespace floodcast {

inline constexpr std::size_t kNumVariables = 9;
inline constexpr std::size_t kWindowSteps = 96;  // two days of 30-minute steps
inline constexpr std::size_t kHorizonSteps = 12;  // six hours

// Row order of a sample's feature matrix.
enum class Feature : std::size_t {
  Rainfall = 0,              // own rainfall over the next 6 h
  WaterLevel,                // own current level
  PredecessorRainfall,       // mean over predecessors, next 6 h
  PredecessorWaterLevel,
  SuccessorRainfall,
  SuccessorWaterLevel,
  ImpermeablePct,
  UpstreamCrossSection,      // sum over adjacent predecessors
  DownstreamCrossSection,    // sum over adjacent successors
};

const char* feature_name(Feature f);

struct Sample {
  Tensor features;  // (9 x 96)
  int label = 0;
  std::string sensor_id;
  Timestamp window_end = 0;
};

using Dataset = std::vector<Sample>;

struct DatasetOptions {
  std::size_t window = kWindowSteps;
  std::size_t horizon = kHorizonSteps;
  std::size_t stride = 1;
  // Zero the future-rainfall rows for experiments without forecast inputs.
  bool zero_future_rain = false;
};

struct DatasetSummary {
  std::size_t samples = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  // "1:3.50" (positives : negatives), or "no samples" / "no positives".
  std::string ratio() const;
  double negatives_per_positive() const;
  std::string describe() const;
};

// Window [t_end - window + 1, t_end]; rainfall rows sum steps (tau, tau + horizon].
Tensor derive_features(const SensorGraph& graph, const EventTrace& trace, std::size_t sensor, std::size_t t_end,
                       const DatasetOptions& options = {});

// 1 iff the level `horizon` steps after t_end is strictly above the bank top.
int overflow_label(const SensorGraph& graph, const EventTrace& trace, std::size_t sensor, std::size_t t_end,
                   std::size_t horizon = kHorizonSteps);

// Sliding windows over every sensor of every trace, ordered by (trace, sensor, t_end).
Dataset build_dataset(const SensorGraph& graph, std::span<const EventTrace> traces, const DatasetOptions& options = {},
                      DatasetSummary* summary = nullptr);

DatasetSummary summarize(const Dataset& data);

// Shuffles and splits off `val_fraction` of the samples (rounded, at least one
// sample on each side when possible).
std::pair<Dataset, Dataset> split_train_val(Dataset data, double val_fraction, RngState& rng);

// Packed binary dataset: magic, version, N/V/T header, features, labels,
// sensor ids and window end times, trailing checksum.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);
std::vector<std::uint8_t> encode_dataset(const Dataset& data);
Dataset decode_dataset(std::span<const std::uint8_t> bytes, const std::string& what = "dataset");

}  // namespace floodcast
