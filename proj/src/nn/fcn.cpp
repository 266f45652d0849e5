#include "floodcast/nn/fcn.hpp"

#include <cmath>

#include "floodcast/errors.hpp"

namespace floodcast {

void ConvBlockParams::validate() const {
  if (kernels.rank() != 3) throw DimensionError("conv kernels must be C_out x C_in x K");
  const Shape c{out_channels()};
  if (bias.shape() != c || bn_gamma.shape() != c || bn_beta.shape() != c || bn.running_mean.shape() != c ||
      bn.running_var.shape() != c) {
    throw DimensionError("conv block per-channel tensors must have length " + std::to_string(out_channels()));
  }
  for (double v : bn.running_var.data())
    if (!(v >= 0.0)) throw NumericError("batchnorm running variance must be non-negative");
}

ConvBlockParams init_conv_block(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
                                RngState& rng) {
  if (in_channels == 0 || out_channels == 0 || kernel_size == 0) throw ConfigError("conv block sizes must be positive");
  if (kernel_size % 2 == 0) throw ConfigError("kernel size must be odd, got " + std::to_string(kernel_size));
  ConvBlockParams p;
  p.kernels = Tensor(Shape{out_channels, in_channels, kernel_size}, 0.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel_size));
  for (auto& v : p.kernels.storage()) v = rng.normal(0.0, s);
  p.bias = Tensor(Shape{out_channels}, 0.0);
  p.bn_gamma = Tensor(Shape{out_channels}, 1.0);
  p.bn_beta = Tensor(Shape{out_channels}, 0.0);
  p.bn = BatchNormState::fresh(out_channels);
  return p;
}

Var conv_block(const ConvBlockVars& p, BatchNormState& state, Var input, Mode mode) {
  return relu(batchnorm(conv1d(input, p.kernels, p.bias), p.bn_gamma, p.bn_beta, state, mode));
}

Var fcn_branch(const std::vector<ConvBlockVars>& blocks, std::vector<BatchNormState*> states, Var input,
               double dropout_rate, Mode mode, RngState& rng) {
  if (blocks.empty()) throw ConfigError("FCN branch needs at least one block");
  if (states.size() != blocks.size()) throw ContractError("one batchnorm state per conv block required");
  Var h = input;
  for (std::size_t i = 0; i < blocks.size(); ++i) h = conv_block(blocks[i], *states[i], h, mode);
  return global_avg_pool(dropout(h, dropout_rate, mode, rng));
}

}  // namespace floodcast
