#include "floodcast/tensor/ops.hpp"

#include <algorithm>
#include <cmath>

#include "eigen_view.hpp"
#include "floodcast/errors.hpp"

namespace floodcast {

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& a, std::size_t rank) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(a.shape()));
  }
}

void require_scalar(const char* op, const Tensor& s) {
  if (s.numel() != 1) {
    throw DimensionError(std::string(op) + ": expected a one-element tensor, got " + shape_string(s.shape()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(A.shape()) + " by " + shape_string(B.shape()));
  }
  Tensor C(Shape{A.dim(0), B.dim(1)});
  as_matrix(C).noalias() = as_matrix(A) * as_matrix(B);
  return a.tape().record("matmul", std::move(C), {a.id(), b.id()},
                         [](const Tape& t, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
                           const Tensor& A = t.value(self.inputs[0]);
                           const Tensor& B = t.value(self.inputs[1]);
                           if (adj[0]) as_matrix(*adj[0]).noalias() += as_matrix(g) * as_matrix(B).transpose();
                           if (adj[1]) as_matrix(*adj[1]).noalias() += as_matrix(A).transpose() * as_matrix(g);
                         });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  require_rank("transpose", A, 2);
  Tensor C(Shape{A.dim(1), A.dim(0)});
  as_matrix(C) = as_matrix(A).transpose();
  return a.tape().record("transpose", std::move(C), {a.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           as_matrix(*adj[0]) += as_matrix(g).transpose();
                         });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor c = a.value();
  c += b.value();
  return a.tape().record("add", std::move(c), {a.id(), b.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           if (adj[0]) *adj[0] += g;
                           if (adj[1]) *adj[1] += g;
                         });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor c = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] -= bv[i];
  return a.tape().record("sub", std::move(c), {a.id(), b.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           if (adj[0]) *adj[0] += g;
                           if (adj[1]) {
                             for (std::size_t i = 0; i < g.numel(); ++i) (*adj[1])[i] -= g[i];
                           }
                         });
}

Var add_row_bias(Var a, Var bias) {
  const Tensor& A = a.value();
  const Tensor& b = bias.value();
  require_rank("add_row_bias", A, 2);
  if (b.numel() != A.dim(1)) {
    throw DimensionError("add_row_bias: bias " + shape_string(b.shape()) + " does not fit rows of " +
                         shape_string(A.shape()));
  }
  Tensor c = A;
  const std::size_t n = A.dim(1);
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] += b[i % n];
  return a.tape().record("add_row_bias", std::move(c), {a.id(), bias.id()},
                         [n](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           if (adj[0]) *adj[0] += g;
                           if (adj[1]) {
                             for (std::size_t i = 0; i < g.numel(); ++i) (*adj[1])[i % n] += g[i];
                           }
                         });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a.value(), b.value());
  Tensor c = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] *= bv[i];
  return a.tape().record("hadamard", std::move(c), {a.id(), b.id()},
                         [](const Tape& t, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
                           const Tensor& A = t.value(self.inputs[0]);
                           const Tensor& B = t.value(self.inputs[1]);
                           if (adj[0]) {
                             for (std::size_t i = 0; i < g.numel(); ++i) (*adj[0])[i] += g[i] * B[i];
                           }
                           if (adj[1]) {
                             for (std::size_t i = 0; i < g.numel(); ++i) (*adj[1])[i] += g[i] * A[i];
                           }
                         });
}

Var scale(Var a, double s) {
  Tensor c = a.value();
  for (auto& v : c.data()) v *= s;
  return a.tape().record("scale", std::move(c), {a.id()},
                         [s](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (std::size_t i = 0; i < g.numel(); ++i) (*adj[0])[i] += s * g[i];
                         });
}

Var scale_by(Var s, Var a) {
  require_scalar("scale_by", s.value());
  const double k = s.value()[0];
  Tensor c = a.value();
  for (auto& v : c.data()) v *= k;
  return a.tape().record("scale_by", std::move(c), {s.id(), a.id()},
                         [](const Tape& t, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
                           const double k = t.value(self.inputs[0])[0];
                           const Tensor& A = t.value(self.inputs[1]);
                           if (adj[0]) {
                             double acc = 0.0;
                             for (std::size_t i = 0; i < g.numel(); ++i) acc += g[i] * A[i];
                             (*adj[0])[0] += acc;
                           }
                           if (adj[1]) {
                             for (std::size_t i = 0; i < g.numel(); ++i) (*adj[1])[i] += k * g[i];
                           }
                         });
}

Var add_scalar(Var a, Var s) {
  require_scalar("add_scalar", s.value());
  const double k = s.value()[0];
  Tensor c = a.value();
  for (auto& v : c.data()) v += k;
  return a.tape().record("add_scalar", std::move(c), {a.id(), s.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           if (adj[0]) *adj[0] += g;
                           if (adj[1]) {
                             double acc = 0.0;
                             for (double v : g.data()) acc += v;
                             (*adj[1])[0] += acc;
                           }
                         });
}

Var one_minus(Var a) {
  Tensor c = a.value();
  for (auto& v : c.data()) v = 1.0 - v;
  return a.tape().record("one_minus", std::move(c), {a.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (std::size_t i = 0; i < g.numel(); ++i) (*adj[0])[i] -= g[i];
                         });
}

Var pointwise(PointwiseKind kind, Var a) {
  Tensor c = a.value();
  const char* name = "";
  switch (kind) {
    case PointwiseKind::Tanh:
      name = "tanh";
      for (auto& v : c.data()) v = std::tanh(v);
      break;
    case PointwiseKind::Sigmoid:
      name = "sigmoid";
      for (auto& v : c.data()) v = sigmoid_value(v);
      break;
    case PointwiseKind::Relu:
      name = "relu";
      for (auto& v : c.data()) v = v > 0.0 ? v : 0.0;
      break;
  }
  // Derivatives are written in terms of the output value.
  return a.tape().record(name, std::move(c), {a.id()},
                         [kind](const Tape&, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
                           const Tensor& y = self.value;
                           Tensor& d = *adj[0];
                           switch (kind) {
                             case PointwiseKind::Tanh:
                               for (std::size_t i = 0; i < g.numel(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
                               break;
                             case PointwiseKind::Sigmoid:
                               for (std::size_t i = 0; i < g.numel(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
                               break;
                             case PointwiseKind::Relu:
                               for (std::size_t i = 0; i < g.numel(); ++i) d[i] += y[i] > 0.0 ? g[i] : 0.0;
                               break;
                           }
                         });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("sum", Tensor::scalar(s), {a.id()},
                         [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (auto& v : adj[0]->data()) v += g[0];
                         });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().numel());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("mean", Tensor::scalar(s / n), {a.id()},
                         [n](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (auto& v : adj[0]->data()) v += g[0] / n;
                         });
}

Var dimension_shuffle(Var x) {
  const Tensor& X = x.value();
  if (X.rank() == 2) {
    Tensor y(Shape{X.dim(1), X.dim(0)});
    as_matrix(y) = as_matrix(X).transpose();
    return x.tape().record("dimension_shuffle", std::move(y), {x.id()},
                           [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                             as_matrix(*adj[0]) += as_matrix(g).transpose();
                           });
  }
  require_rank("dimension_shuffle", X, 3);
  const std::size_t B = X.dim(0), M = X.dim(1), Q = X.dim(2);
  Tensor y(Shape{B, Q, M});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < Q; ++j) y.at(b, j, i) = X.at(b, i, j);
  return x.tape().record("dimension_shuffle", std::move(y), {x.id()},
                         [B, M, Q](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           Tensor& d = *adj[0];
                           for (std::size_t b = 0; b < B; ++b)
                             for (std::size_t i = 0; i < M; ++i)
                               for (std::size_t j = 0; j < Q; ++j) d.at(b, i, j) += g.at(b, j, i);
                         });
}

Var take_step(Var x, std::size_t t) {
  const Tensor& X = x.value();
  require_rank("take_step", X, 3);
  const std::size_t B = X.dim(0), F = X.dim(1), S = X.dim(2);
  if (t >= S) throw DimensionError("take_step: step " + std::to_string(t) + " outside " + shape_string(X.shape()));
  Tensor y(Shape{B, F});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) y.at(b, f) = X.at(b, f, t);
  return x.tape().record("take_step", std::move(y), {x.id()},
                         [B, F, t](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           Tensor& d = *adj[0];
                           for (std::size_t b = 0; b < B; ++b)
                             for (std::size_t f = 0; f < F; ++f) d.at(b, f, t) += g.at(b, f);
                         });
}

Var concat_cols(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& Bt = b.value();
  require_rank("concat_cols", A, 2);
  require_rank("concat_cols", Bt, 2);
  if (A.dim(0) != Bt.dim(0)) {
    throw DimensionError("concat_cols: row mismatch " + shape_string(A.shape()) + " vs " + shape_string(Bt.shape()));
  }
  const std::size_t rows = A.dim(0), m = A.dim(1), n = Bt.dim(1);
  Tensor c(Shape{rows, m + n});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) c.at(r, j) = A.at(r, j);
    for (std::size_t j = 0; j < n; ++j) c.at(r, m + j) = Bt.at(r, j);
  }
  return a.tape().record("concat_cols", std::move(c), {a.id(), b.id()},
                         [rows, m, n](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (std::size_t r = 0; r < rows; ++r) {
                             if (adj[0])
                               for (std::size_t j = 0; j < m; ++j) adj[0]->at(r, j) += g.at(r, j);
                             if (adj[1])
                               for (std::size_t j = 0; j < n; ++j) adj[1]->at(r, j) += g.at(r, m + j);
                           }
                         });
}

Var softmax_rows(Var a) {
  const Tensor& A = a.value();
  require_rank("softmax_rows", A, 2);
  const std::size_t rows = A.dim(0), cols = A.dim(1);
  Tensor p(A.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = A.at(r, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, A.at(r, j));
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      p.at(r, j) = std::exp(A.at(r, j) - mx);
      z += p.at(r, j);
    }
    for (std::size_t j = 0; j < cols; ++j) p.at(r, j) /= z;
  }
  return a.tape().record("softmax_rows", std::move(p), {a.id()},
                         [rows, cols](const Tape&, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
                           const Tensor& p = self.value;
                           for (std::size_t r = 0; r < rows; ++r) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < cols; ++j) dot += g.at(r, j) * p.at(r, j);
                             for (std::size_t j = 0; j < cols; ++j) adj[0]->at(r, j) += p.at(r, j) * (g.at(r, j) - dot);
                           }
                         });
}

Var global_avg_pool(Var x) {
  const Tensor& X = x.value();
  require_rank("global_avg_pool", X, 3);
  const std::size_t B = X.dim(0), C = X.dim(1), T = X.dim(2);
  Tensor y(Shape{B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += X.at(b, c, t);
      y.at(b, c) = s / static_cast<double>(T);
    }
  return x.tape().record("global_avg_pool", std::move(y), {x.id()},
                         [B, C, T](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           const double inv = 1.0 / static_cast<double>(T);
                           for (std::size_t b = 0; b < B; ++b)
                             for (std::size_t c = 0; c < C; ++c)
                               for (std::size_t t = 0; t < T; ++t) adj[0]->at(b, c, t) += g.at(b, c) * inv;
                         });
}

Var dropout(Var x, double rate, Mode mode, RngState& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::Infer || rate == 0.0) {
    return x.tape().record("dropout", x.value(), {x.id()},
                           [](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                             *adj[0] += g;
                           });
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (auto& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor y = x.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] *= mask[i];
  return x.tape().record("dropout", std::move(y), {x.id()},
                         [mask = std::move(mask)](const Tape&, const Node&, const Tensor& g,
                                                  std::span<Tensor* const> adj) {
                           for (std::size_t i = 0; i < g.numel(); ++i) (*adj[0])[i] += g[i] * mask[i];
                         });
}

Var standardize(Var x, const Tensor& shift, const Tensor& scale) {
  const Tensor& X = x.value();
  require_rank("standardize", X, 3);
  const std::size_t B = X.dim(0), V = X.dim(1), T = X.dim(2);
  if (shift.numel() != V || scale.numel() != V) {
    throw DimensionError("standardize: " + std::to_string(V) + " variables but scaler has " +
                         std::to_string(shift.numel()));
  }
  Tensor y(X.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t t = 0; t < T; ++t) y.at(b, v, t) = (X.at(b, v, t) - shift[v]) / scale[v];
  return x.tape().record("standardize", std::move(y), {x.id()},
                         [B, V, T, scale](const Tape&, const Node&, const Tensor& g, std::span<Tensor* const> adj) {
                           for (std::size_t b = 0; b < B; ++b)
                             for (std::size_t v = 0; v < V; ++v)
                               for (std::size_t t = 0; t < T; ++t) adj[0]->at(b, v, t) += g.at(b, v, t) / scale[v];
                         });
}

}  // namespace floodcast
