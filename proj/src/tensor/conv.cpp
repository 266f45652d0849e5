#include <string>

#include "eigen_view.hpp"
#include "floodcast/errors.hpp"
#include "floodcast/tensor/ops.hpp"

namespace floodcast {

namespace {

struct ConvGeometry {
  std::size_t batch, c_in, c_out, steps, width, pad;
};

// cols[(ci*K + k), (b*T + t)] = x[b, ci, t + k - pad], zero outside the series.
Tensor im2col(const Tensor& x, const ConvGeometry& g) {
  Tensor cols(Shape{g.c_in * g.width, g.batch * g.steps}, 0.0);
  const std::size_t row_len = g.batch * g.steps;
  for (std::size_t ci = 0; ci < g.c_in; ++ci)
    for (std::size_t k = 0; k < g.width; ++k) {
      double* row = cols.data().data() + (ci * g.width + k) * row_len;
      for (std::size_t b = 0; b < g.batch; ++b) {
        const double* src = x.data().data() + (b * g.c_in + ci) * g.steps;
        for (std::size_t t = 0; t < g.steps; ++t) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(g.pad);
          if (s >= 0 && s < static_cast<std::ptrdiff_t>(g.steps)) row[b * g.steps + t] = src[s];
        }
      }
    }
  return cols;
}

void col2im_add(const Tensor& dcols, Tensor& dx, const ConvGeometry& g) {
  const std::size_t row_len = g.batch * g.steps;
  for (std::size_t ci = 0; ci < g.c_in; ++ci)
    for (std::size_t k = 0; k < g.width; ++k) {
      const double* row = dcols.data().data() + (ci * g.width + k) * row_len;
      for (std::size_t b = 0; b < g.batch; ++b) {
        double* dst = dx.data().data() + (b * g.c_in + ci) * g.steps;
        for (std::size_t t = 0; t < g.steps; ++t) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(g.pad);
          if (s >= 0 && s < static_cast<std::ptrdiff_t>(g.steps)) dst[s] += row[b * g.steps + t];
        }
      }
    }
}

}  // namespace

Var conv1d(Var input, Var kernels, Var bias) {
  const Tensor& X = input.value();
  const Tensor& W = kernels.value();
  const Tensor& bv = bias.value();
  if (W.rank() != 3) throw DimensionError("conv1d: kernels must be (Cout x Cin x K), got " + shape_string(W.shape()));
  if (X.rank() != 2 && X.rank() != 3) {
    throw DimensionError("conv1d: input must be (Cin x T) or (B x Cin x T), got " + shape_string(X.shape()));
  }
  const bool batched = X.rank() == 3;
  ConvGeometry g{};
  g.batch = batched ? X.dim(0) : 1;
  g.c_in = batched ? X.dim(1) : X.dim(0);
  g.steps = batched ? X.dim(2) : X.dim(1);
  g.c_out = W.dim(0);
  g.width = W.dim(2);
  if (g.width % 2 == 0) {
    throw ConfigError("conv1d: kernel width must be odd for same padding, got " + std::to_string(g.width));
  }
  g.pad = (g.width - 1) / 2;
  if (W.dim(1) != g.c_in) {
    throw DimensionError("conv1d: input " + shape_string(X.shape()) + " has " + std::to_string(g.c_in) +
                         " channels but kernels " + shape_string(W.shape()) + " expect " + std::to_string(W.dim(1)));
  }
  if (bv.numel() != g.c_out) {
    throw DimensionError("conv1d: bias " + shape_string(bv.shape()) + " does not match " + std::to_string(g.c_out) +
                         " output channels");
  }

  Tensor cols = im2col(X, g);
  Tensor ymat(Shape{g.c_out, g.batch * g.steps});
  as_matrix(ymat).noalias() = as_matrix(W, g.c_out, g.c_in * g.width) * as_matrix(cols);

  Tensor y = batched ? Tensor(Shape{g.batch, g.c_out, g.steps}) : Tensor(Shape{g.c_out, g.steps});
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* src = ymat.data().data() + co * g.batch * g.steps + b * g.steps;
      double* dst = y.data().data() + (b * g.c_out + co) * g.steps;
      for (std::size_t t = 0; t < g.steps; ++t) dst[t] = src[t] + bv[co];
    }

  return input.tape().record(
      "conv1d", std::move(y), {input.id(), kernels.id(), bias.id()},
      [g, cols = std::move(cols)](const Tape& tape, const Node& self, const Tensor& up,
                                  std::span<Tensor* const> adj) {
        const std::size_t row_len = g.batch * g.steps;
        Tensor gmat(Shape{g.c_out, row_len});
        for (std::size_t b = 0; b < g.batch; ++b)
          for (std::size_t co = 0; co < g.c_out; ++co) {
            const double* src = up.data().data() + (b * g.c_out + co) * g.steps;
            double* dst = gmat.data().data() + co * row_len + b * g.steps;
            for (std::size_t t = 0; t < g.steps; ++t) dst[t] = src[t];
          }
        if (adj[1]) {
          as_matrix(*adj[1], g.c_out, g.c_in * g.width).noalias() += as_matrix(gmat) * as_matrix(cols).transpose();
        }
        if (adj[2]) {
          for (std::size_t co = 0; co < g.c_out; ++co) {
            double s = 0.0;
            for (std::size_t j = 0; j < row_len; ++j) s += gmat.data()[co * row_len + j];
            (*adj[2])[co] += s;
          }
        }
        if (adj[0]) {
          const Tensor& W = tape.value(self.inputs[1]);
          Tensor dcols(Shape{g.c_in * g.width, row_len});
          as_matrix(dcols).noalias() = as_matrix(W, g.c_out, g.c_in * g.width).transpose() * as_matrix(gmat);
          col2im_add(dcols, *adj[0], g);
        }
      });
}

}  // namespace floodcast
