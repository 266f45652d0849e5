#include <cmath>
#include <string>

#include "floodcast/errors.hpp"
#include "floodcast/tensor/ops.hpp"

namespace floodcast {

Var batchnorm(Var input, Var gamma, Var beta, BatchNormState& state, Mode mode, double momentum, double epsilon) {
  const Tensor& X = input.value();
  if (X.rank() != 3) throw DimensionError("batchnorm: input must be (B x C x T), got " + shape_string(X.shape()));
  const std::size_t B = X.dim(0), C = X.dim(1), T = X.dim(2);
  const Tensor& ga = gamma.value();
  const Tensor& be = beta.value();
  if (ga.numel() != C || be.numel() != C || state.running_mean.numel() != C || state.running_var.numel() != C) {
    throw DimensionError("batchnorm: parameters do not match " + std::to_string(C) + " channels");
  }

  // Per channel: xhat = (x - mu) * inv_std, y = gamma * xhat + beta.
  Tensor mu(Shape{C});
  Tensor inv_std(Shape{C});
  if (mode == Mode::Train) {
    const std::size_t n = B * T;
    if (n < 2) {
      throw NumericError("batchnorm: train mode needs at least two values per channel, got " + std::to_string(n));
    }
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) s += X.at(b, c, t);
      const double m = s / static_cast<double>(n);
      double v = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
          const double d = X.at(b, c, t) - m;
          v += d * d;
        }
      v /= static_cast<double>(n);
      mu[c] = m;
      inv_std[c] = 1.0 / std::sqrt(v + epsilon);
      state.running_mean[c] = momentum * state.running_mean[c] + (1.0 - momentum) * m;
      state.running_var[c] = momentum * state.running_var[c] + (1.0 - momentum) * v;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mu[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + epsilon);
    }
  }

  Tensor xhat(X.shape());
  Tensor y(X.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t) {
        const double h = (X.at(b, c, t) - mu[c]) * inv_std[c];
        xhat.at(b, c, t) = h;
        y.at(b, c, t) = ga[c] * h + be[c];
      }

  const bool train = mode == Mode::Train;
  return input.tape().record(
      train ? "batchnorm_train" : "batchnorm_infer", std::move(y), {input.id(), gamma.id(), beta.id()},
      [B, C, T, train, inv_std = std::move(inv_std), xhat = std::move(xhat)](
          const Tape& tape, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
        const Tensor& ga = tape.value(self.inputs[1]);
        const double n = static_cast<double>(B * T);
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
              sum_g += g.at(b, c, t);
              sum_gx += g.at(b, c, t) * xhat.at(b, c, t);
            }
          if (adj[1]) (*adj[1])[c] += sum_gx;
          if (adj[2]) (*adj[2])[c] += sum_g;
          if (!adj[0]) continue;
          const double k = ga[c] * inv_std[c];
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t) {
              if (train) {
                adj[0]->at(b, c, t) += k * (g.at(b, c, t) - sum_g / n - xhat.at(b, c, t) * sum_gx / n);
              } else {
                adj[0]->at(b, c, t) += k * g.at(b, c, t);
              }
            }
        }
      });
}

}  // namespace floodcast
