#include "floodcast/floodgen/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "floodcast/errors.hpp"
#include "floodcast/tensor/binary_io.hpp"

namespace floodcast {

namespace {
constexpr char kDatasetMagic[8] = {'F', 'C', 'D', 'A', 'T', 'A', 'S', 'T'};
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::Rainfall: return "rainfall_next_6h_in";
    case Feature::WaterLevel: return "water_level_ft";
    case Feature::PredecessorRainfall: return "predecessor_rainfall_next_6h_in";
    case Feature::PredecessorWaterLevel: return "predecessor_water_level_ft";
    case Feature::SuccessorRainfall: return "successor_rainfall_next_6h_in";
    case Feature::SuccessorWaterLevel: return "successor_water_level_ft";
    case Feature::ImpermeablePct: return "impermeable_pct";
    case Feature::UpstreamCrossSection: return "upstream_cross_section_ft2";
    case Feature::DownstreamCrossSection: return "downstream_cross_section_ft2";
  }
  return "?";
}

std::string DatasetSummary::ratio() const {
  if (samples == 0) return "no samples";
  if (positives == 0) return "no positives";
  char buf[64];
  std::snprintf(buf, sizeof buf, "1:%.2f", negatives_per_positive());
  return buf;
}

double DatasetSummary::negatives_per_positive() const {
  return positives == 0 ? 0.0 : static_cast<double>(negatives) / static_cast<double>(positives);
}

std::string DatasetSummary::describe() const {
  return std::to_string(samples) + " samples, " + std::to_string(positives) + " positive, " +
         std::to_string(negatives) + " negative (positive:negative " + ratio() + ")";
}

namespace {

double future_rain(const EventTrace& trace, std::size_t sensor, std::size_t tau, std::size_t horizon) {
  double s = 0.0;
  for (std::size_t u = tau + 1; u <= tau + horizon; ++u) s += trace.rainfall[sensor][u];
  return s;
}

}  // namespace

Tensor derive_features(const SensorGraph& graph, const EventTrace& trace, std::size_t sensor, std::size_t t_end,
                       const DatasetOptions& o) {
  if (sensor >= graph.size() || trace.sensors() != graph.size()) {
    throw DimensionError("derive_features: trace and graph disagree on sensors");
  }
  if (o.window == 0 || t_end + 1 < o.window || t_end + o.horizon >= trace.steps()) {
    throw WindowError("derive_features: trace " + trace.name + " of " + std::to_string(trace.steps()) +
                      " steps does not cover window ending at " + std::to_string(t_end) + " plus " +
                      std::to_string(o.horizon) + " steps ahead");
  }
  const auto& preds = graph.predecessors(sensor);
  const auto& succs = graph.successors(sensor);
  Tensor f(Shape{kNumVariables, o.window}, 0.0);
  const std::size_t first = t_end + 1 - o.window;

  auto row = [&](Feature which, std::size_t col) -> double& { return f.at(static_cast<std::size_t>(which), col); };

  double up_area = 0.0, down_area = 0.0;
  for (auto p : preds) up_area += graph.node(p).cross_section_ft2;
  for (auto s : succs) down_area += graph.node(s).cross_section_ft2;

  for (std::size_t c = 0; c < o.window; ++c) {
    const std::size_t tau = first + c;
    if (!o.zero_future_rain) row(Feature::Rainfall, c) = future_rain(trace, sensor, tau, o.horizon);
    row(Feature::WaterLevel, c) = trace.level[sensor][tau];
    if (!preds.empty()) {
      double r = 0.0, l = 0.0;
      for (auto p : preds) {
        r += future_rain(trace, p, tau, o.horizon);
        l += trace.level[p][tau];
      }
      if (!o.zero_future_rain) row(Feature::PredecessorRainfall, c) = r / static_cast<double>(preds.size());
      row(Feature::PredecessorWaterLevel, c) = l / static_cast<double>(preds.size());
    }
    if (!succs.empty()) {
      double r = 0.0, l = 0.0;
      for (auto s : succs) {
        r += future_rain(trace, s, tau, o.horizon);
        l += trace.level[s][tau];
      }
      if (!o.zero_future_rain) row(Feature::SuccessorRainfall, c) = r / static_cast<double>(succs.size());
      row(Feature::SuccessorWaterLevel, c) = l / static_cast<double>(succs.size());
    }
    row(Feature::ImpermeablePct, c) = graph.node(sensor).impermeable_pct;
    row(Feature::UpstreamCrossSection, c) = up_area;
    row(Feature::DownstreamCrossSection, c) = down_area;
  }
  return f;
}

int overflow_label(const SensorGraph& graph, const EventTrace& trace, std::size_t sensor, std::size_t t_end,
                   std::size_t horizon) {
  if (t_end + horizon >= trace.steps()) throw WindowError("overflow_label: label step beyond the trace");
  return trace.level[sensor][t_end + horizon] > graph.node(sensor).bank_height_ft ? 1 : 0;
}

Dataset build_dataset(const SensorGraph& graph, std::span<const EventTrace> traces, const DatasetOptions& o,
                      DatasetSummary* summary) {
  if (o.stride == 0) throw ConfigError("window stride must be positive");
  Dataset out;
  for (const auto& trace : traces) {
    if (trace.sensors() != graph.size()) {
      throw DimensionError("trace " + trace.name + " has " + std::to_string(trace.sensors()) + " sensors, graph has " +
                           std::to_string(graph.size()));
    }
    if (trace.steps() < o.window + o.horizon) continue;
    for (std::size_t s = 0; s < graph.size(); ++s) {
      for (std::size_t t_end = o.window - 1; t_end + o.horizon < trace.steps(); t_end += o.stride) {
        Sample smp;
        smp.features = derive_features(graph, trace, s, t_end, o);
        smp.label = overflow_label(graph, trace, s, t_end, o.horizon);
        smp.sensor_id = graph.node(s).id;
        smp.window_end = trace.time_at(t_end);
        out.push_back(std::move(smp));
      }
    }
  }
  if (summary) *summary = summarize(out);
  return out;
}

DatasetSummary summarize(const Dataset& data) {
  DatasetSummary s;
  s.samples = data.size();
  for (const auto& d : data) (d.label ? s.positives : s.negatives)++;
  return s;
}

std::pair<Dataset, Dataset> split_train_val(Dataset data, double val_fraction, RngState& rng) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  // Fisher-Yates with the portable generator.
  for (std::size_t i = data.size(); i > 1; --i) std::swap(data[i - 1], data[rng.below(i)]);
  std::size_t n_val = static_cast<std::size_t>(static_cast<double>(data.size()) * val_fraction + 0.5);
  if (data.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  Dataset val(std::make_move_iterator(data.end() - static_cast<std::ptrdiff_t>(n_val)),
              std::make_move_iterator(data.end()));
  data.resize(data.size() - n_val);
  return {std::move(data), std::move(val)};
}

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
  BinaryWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kDatasetMagic), sizeof kDatasetMagic));
  w.u32(kDatasetVersion);
  const std::size_t V = data.empty() ? kNumVariables : data.front().features.dim(0);
  const std::size_t T = data.empty() ? kWindowSteps : data.front().features.dim(1);
  w.u64(data.size());
  w.u64(V);
  w.u64(T);
  for (const auto& s : data) {
    if (s.features.shape() != Shape{V, T}) throw DimensionError("dataset samples have mixed shapes");
    for (double v : s.features.data()) w.f64(v);
  }
  for (const auto& s : data) w.u8(static_cast<std::uint8_t>(s.label));
  for (const auto& s : data) {
    w.string(s.sensor_id);
    w.i64(s.window_end);
  }
  w.seal();
  return w.bytes();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes, const std::string& what) {
  BinaryReader head(bytes, what);
  const auto m = head.raw(sizeof kDatasetMagic);
  if (!std::equal(m.begin(), m.end(), reinterpret_cast<const std::uint8_t*>(kDatasetMagic))) {
    throw LoadError(LoadError::Kind::BadMagic, what + ": not a packed dataset file");
  }
  const auto version = head.u32();
  if (version != kDatasetVersion) {
    throw LoadError(LoadError::Kind::VersionMismatch, what + ": dataset format version " + std::to_string(version) +
                                                          ", expected " + std::to_string(kDatasetVersion));
  }
  if (bytes.size() < head.position() + 8) throw LoadError(LoadError::Kind::Truncated, what + ": truncated");
  BinaryReader r(bytes.first(bytes.size() - 8), what);
  r.raw(head.position());
  const std::size_t n = r.u64(), V = r.u64(), T = r.u64();
  if (V == 0 || T == 0) throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": empty sample shape");
  if (n * V * T * 8 > r.remaining()) throw LoadError(LoadError::Kind::Truncated, what + ": truncated feature block");
  Dataset data(n);
  for (auto& s : data) {
    std::vector<double> v(V * T);
    for (auto& x : v) x = r.f64();
    s.features = Tensor(Shape{V, T}, std::move(v));
  }
  for (auto& s : data) {
    const auto l = r.u8();
    if (l > 1) throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": label outside {0, 1}");
    s.label = l;
  }
  for (auto& s : data) {
    s.sensor_id = r.string();
    s.window_end = r.i64();
  }
  if (r.remaining() != 0) throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": trailing bytes");
  verify_sealed(bytes, what);
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) { write_file_bytes(path, encode_dataset(data)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(read_file_bytes(path), path); }

}  // namespace floodcast
