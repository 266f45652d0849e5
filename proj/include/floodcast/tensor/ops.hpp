#pragma once

#include <cstddef>

#include "floodcast/tensor/rng.hpp"
#include "floodcast/tensor/tape.hpp"

namespace floodcast {

enum class Mode { Train, Infer };

enum class PointwiseKind { Tanh, Sigmoid, Relu };

double sigmoid_value(double x);

// ---- linear algebra -------------------------------------------------------

// (m x k) * (k x n)
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
// a (m x n) + bias (n), broadcast over rows.
Var add_row_bias(Var a, Var bias);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
// s is a one-element tensor.
Var scale_by(Var s, Var a);
Var add_scalar(Var a, Var s);
Var one_minus(Var a);

// ---- elementwise nonlinearities ------------------------------------------

Var pointwise(PointwiseKind kind, Var a);
inline Var sigmoid(Var a) { return pointwise(PointwiseKind::Sigmoid, a); }
inline Var tanh(Var a) { return pointwise(PointwiseKind::Tanh, a); }
inline Var relu(Var a) { return pointwise(PointwiseKind::Relu, a); }

// ---- reductions and reshaping --------------------------------------------

Var sum(Var a);
Var mean(Var a);

// Swaps the last two axes of a rank-2 or rank-3 tensor.
Var dimension_shuffle(Var x);
// Column `t` of every batch item: x (B x F x S) -> (B x F).
Var take_step(Var x, std::size_t t);
// (B x m) ++ (B x n) -> (B x (m+n)).
Var concat_cols(Var a, Var b);
Var softmax_rows(Var a);
// (B x C x T) -> (B x C); mean over time.
Var global_avg_pool(Var x);

// Inverted dropout: survivors are scaled by 1/(1-rate). Identity in Infer mode.
Var dropout(Var x, double rate, Mode mode, RngState& rng);

// Per-variable standardisation of (B x V x T): (x - shift[v]) / scale[v].
Var standardize(Var x, const Tensor& shift, const Tensor& scale);

// ---- convolution and normalisation ---------------------------------------

// Cross-correlation with zero "same" padding, odd K only.
// input (B x Cin x T) or (Cin x T); kernels (Cout x Cin x K); bias (Cout).
Var conv1d(Var input, Var kernels, Var bias);

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;

  static BatchNormState fresh(std::size_t channels) {
    return {Tensor(Shape{channels}, 0.0), Tensor(Shape{channels}, 1.0)};
  }
};

inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEpsilon = 1e-3;

// Per-channel normalisation of (B x C x T) over batch and time. Train mode uses
// batch statistics and updates `state`; Infer mode uses the running values.
Var batchnorm(Var input, Var gamma, Var beta, BatchNormState& state, Mode mode,
              double momentum = kBatchNormMomentum, double epsilon = kBatchNormEpsilon);

}  // namespace floodcast
