#pragma once

#include <cstddef>

#include "floodcast/tensor/ops.hpp"
#include "floodcast/tensor/rng.hpp"
#include "floodcast/tensor/tape.hpp"
#include "floodcast/tensor/tensor.hpp"

namespace floodcast {

// One W and one U shared by the gate and the candidate:
//   z   = sigmoid(W x + U h + b_z)
//   h~  = tanh(W x + U h + b_h)
//   h'  = (zeta (1 - z) + nu) * h~ + z * h
// with zeta = sigmoid(zeta_raw), nu = sigmoid(nu_raw).
struct FastGrnnParams {
  Tensor W;         // (H x D)
  Tensor U;         // (H x H)
  Tensor b_z;       // (H)
  Tensor b_h;       // (H)
  Tensor zeta_raw;  // (1)
  Tensor nu_raw;    // (1)

  std::size_t hidden() const { return W.dim(0); }
  std::size_t input() const { return W.dim(1); }
  double zeta() const { return sigmoid_value(zeta_raw.item()); }
  double nu() const { return sigmoid_value(nu_raw.item()); }
  // DimensionError unless all shapes agree with W.
  void validate() const;
};

// Upper bounds on the fraction of non-zero entries kept in W and U.
struct SparsityBudget {
  double s_w = 1.0;
  double s_u = 1.0;

  bool active() const { return s_w < 1.0 || s_u < 1.0; }
  void validate() const;
};

// W, U ~ N(0, 1/fan_in), biases 0, zeta_raw = nu_raw = 1.
FastGrnnParams init_fastgrnn(std::size_t input, std::size_t hidden, RngState& rng);

// Plain value evaluation of one step on vectors x (D) and h_prev (H).
Tensor cell_step(const FastGrnnParams& p, const Tensor& x, const Tensor& h_prev);
// Folds cell_step over the columns of X (D x T). An empty h0 means zeros.
Tensor run_sequence(const FastGrnnParams& p, const Tensor& X, const Tensor& h0 = {});
// Matrix transpose (M x Q) -> (Q x M).
Tensor dimension_shuffle(const Tensor& X);

// Number of entries kept for a budget: ceil(s * n), at least 1.
std::size_t sparse_keep_count(double s, std::size_t n);
// Keeps the largest-magnitude entries in place; ties go to the smaller flat index.
void project_sparse_inplace(Tensor& m, double s);
FastGrnnParams project_sparse(FastGrnnParams p, const SparsityBudget& budget);

// Parameters bound to a tape.
struct FastGrnnVars {
  Var W, U, b_z, b_h, zeta_raw, nu_raw;
};

// Batched step: x (B x D), h (B x H). Wt and Ut are transpose(W) and transpose(U),
// passed in so a sequence transposes once.
Var cell_step(const FastGrnnVars& p, Var Wt, Var Ut, Var x, Var h);
// X (B x D x S); steps run over the last axis. h0 (B x H).
Var run_sequence(const FastGrnnVars& p, Var X, Var h0);

}  // namespace floodcast
