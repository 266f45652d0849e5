#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodcast/floodgen/dataset.hpp"
#include "floodcast/nn/fastgrnn.hpp"
#include "floodcast/nn/fcn.hpp"

namespace floodcast {

enum class Variant { Hybrid, FastGrnnOnly, FcnOnly };

const char* variant_name(Variant v);
// Accepts "hybrid", "fastgrnn-only", "fcn-only".
Variant parse_variant(const std::string& name);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ModelConfig {
  Variant variant = Variant::Hybrid;
  std::size_t num_variables = kNumVariables;
  std::size_t window = kWindowSteps;
  std::size_t hidden_size = 64;
  std::vector<std::size_t> conv_channels{128, 256, 128};
  std::vector<std::size_t> kernel_sizes{7, 5, 3};
  double dropout_rate = 0.5;
  std::size_t num_classes = 2;
  double loss_weight = 1.0;
  SparsityBudget sparsity;
  AdamConfig optimizer;
  std::size_t patience = 20;
  std::size_t max_epochs = 600;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  bool uses_fastgrnn() const { return variant != Variant::FcnOnly; }
  bool uses_fcn() const { return variant != Variant::FastGrnnOnly; }
  // Length of the feature vector entering the softmax head.
  std::size_t head_inputs() const;
  // ConfigError on any inconsistent or out-of-range setting.
  void validate() const;

  // "key=value" lines, doubles in shortest round-trip form.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&);
};

// Sets one ModelConfig field from text. Returns false for keys that are not
// model settings; throws ConfigError for a bad value.
bool apply_model_key(ModelConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> model_config_keys();

// Per-variable affine standardisation fitted on the training set.
struct InputScaler {
  Tensor shift;  // (V)
  Tensor scale;  // (V), strictly positive

  static InputScaler identity(std::size_t variables);
  // Mean and standard deviation over all samples and steps; constant rows get scale 1.
  static InputScaler fit(const Dataset& data);
  bool is_identity() const;
};

struct ModelParams {
  std::optional<FastGrnnParams> fastgrnn;
  std::vector<ConvBlockParams> fcn;
  Tensor head_w;  // (L x F)
  Tensor head_b;  // (L)
  InputScaler scaler;
};

ModelParams init_model(const ModelConfig& cfg, RngState& rng);
// DimensionError if the parameter shapes do not match the configuration.
void check_params(const ModelConfig& cfg, const ModelParams& params);

// Trainable tensors in a fixed order: FastGRNN (W, U, b_z, b_h, zeta_raw, nu_raw),
// each conv block (kernels, bias, gamma, beta), head (W, b).
std::vector<Tensor*> parameter_tensors(ModelParams& params);
std::vector<const Tensor*> parameter_tensors(const ModelParams& params);
std::vector<std::string> parameter_names(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

struct ModelVars {
  std::optional<FastGrnnVars> fastgrnn;
  std::vector<ConvBlockVars> fcn;
  Var head_w, head_b;
};

// `flat` follows parameter_tensors order.
ModelVars vars_from_flat(const ModelParams& layout, std::span<const Var> flat);
ModelVars bind_parameters(Tape& tape, const ModelParams& params, bool trainable);
std::vector<Var> flat_vars(const ModelVars& vars);

// batch (B x V x T) -> class probabilities (B x L). Train mode updates the
// batchnorm running statistics held in `params`.
Var forward(const ModelVars& vars, ModelParams& params, const ModelConfig& cfg, Var batch, Mode mode,
            RngState& rng);

// Inference-mode probabilities without touching `params`.
Tensor predict_proba(const ModelParams& params, const ModelConfig& cfg, const Tensor& batch);
// P(class 1) for every sample, evaluated in chunks of `batch_size`.
std::vector<double> predict_scores(const ModelParams& params, const ModelConfig& cfg, const Dataset& data,
                                   std::size_t batch_size = 256);

// Stacks the selected samples into (B x V x T).
Tensor stack_batch(const Dataset& data, std::span<const std::size_t> indices);
std::vector<int> batch_labels(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace floodcast
