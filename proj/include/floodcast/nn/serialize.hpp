#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "floodcast/nn/model.hpp"

namespace floodcast {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct SavedModel {
  ModelConfig config;
  ModelParams params;
  // Decision threshold used by `predict`.
  double threshold = 0.5;
  std::size_t trained_epochs = 0;
};

// Layout: magic "FCMODEL1", u32 version, config text, threshold, epoch count,
// named tensor blocks (parameters, batchnorm statistics, input scaler), and a
// trailing FNV-1a checksum. Doubles are stored bit for bit.
std::vector<std::uint8_t> encode_model(const SavedModel& model);
SavedModel decode_model(std::span<const std::uint8_t> bytes, const std::string& what = "model");

void save_model(const SavedModel& model, const std::string& path);
SavedModel load_model(const std::string& path);

}  // namespace floodcast
