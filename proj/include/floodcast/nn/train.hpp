#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "floodcast/floodgen/dataset.hpp"
#include "floodcast/nn/model.hpp"

namespace floodcast {

// Adam with bias correction.
class Adam {
 public:
  Adam(const AdamConfig& cfg, const std::vector<const Tensor*>& params);

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

// Improvements in validation loss smaller than this do not reset patience.
inline constexpr double kEarlyStopMinDelta = 1e-5;

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based, continues across resumed runs
  // Running means over the epoch's mini-batches (train mode, dropout active).
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  // Inference mode over the whole validation set.
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;

  double mean_epoch_seconds() const;
};

struct TrainOptions {
  // Continue from these parameters instead of a fresh initialisation.
  const ModelParams* initial = nullptr;
  // Epochs already run by `initial`; numbering and RNG streams continue from here.
  std::size_t epoch_offset = 0;
  // Fit the input scaler on the training set (fresh runs only).
  bool fit_scaler = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;  // from the epoch with the lowest validation loss
  TrainReport report;
};

// Mini-batch Adam on the weighted cross-entropy with early stopping on the
// validation loss. Throws ConfigError for empty sets and DivergenceError for a
// non-finite loss.
TrainResult train(const ModelConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                  const TrainOptions& options = {});

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Inference-mode loss (at cfg.loss_weight) and accuracy at threshold 0.5.
LossAccuracy evaluate_loss(const ModelParams& params, const ModelConfig& cfg, const Dataset& data,
                           std::size_t batch_size = 256);

}  // namespace floodcast
