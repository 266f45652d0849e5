#pragma once

#include <cstddef>
#include <vector>

#include "floodcast/tensor/ops.hpp"
#include "floodcast/tensor/rng.hpp"
#include "floodcast/tensor/tape.hpp"

namespace floodcast {

// conv1d -> batchnorm -> ReLU.
struct ConvBlockParams {
  Tensor kernels;  // (C_out x C_in x K)
  Tensor bias;     // (C_out)
  Tensor bn_gamma;
  Tensor bn_beta;
  BatchNormState bn;  // running mean / variance

  std::size_t out_channels() const { return kernels.dim(0); }
  std::size_t in_channels() const { return kernels.dim(1); }
  std::size_t kernel_size() const { return kernels.dim(2); }
  void validate() const;
};

// Kernels ~ N(0, 1/(C_in K)), bias 0, gamma 1, beta 0, running stats (0, 1).
ConvBlockParams init_conv_block(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
                                RngState& rng);

struct ConvBlockVars {
  Var kernels, bias, bn_gamma, bn_beta;
};

// input (B x C_in x T) -> (B x C_out x T). Train mode updates `state`.
Var conv_block(const ConvBlockVars& p, BatchNormState& state, Var input, Mode mode);

// Blocks in sequence, then dropout, then global average pooling: (B x C x T) -> (B x C_last).
Var fcn_branch(const std::vector<ConvBlockVars>& blocks, std::vector<BatchNormState*> states, Var input,
               double dropout_rate, Mode mode, RngState& rng);

}  // namespace floodcast
