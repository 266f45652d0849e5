#include "floodcast/nn/fastgrnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodcast/errors.hpp"

namespace floodcast {

void FastGrnnParams::validate() const {
  if (W.rank() != 2) throw DimensionError("FastGRNN W must be a matrix, got " + shape_string(W.shape()));
  const std::size_t H = W.dim(0);
  if (U.shape() != Shape{H, H}) throw DimensionError("FastGRNN U must be " + std::to_string(H) + "x" +
                                                      std::to_string(H) + ", got " + shape_string(U.shape()));
  if (b_z.shape() != Shape{H} || b_h.shape() != Shape{H}) throw DimensionError("FastGRNN bias length mismatch");
  if (zeta_raw.numel() != 1 || nu_raw.numel() != 1) throw DimensionError("FastGRNN zeta/nu must be scalars");
}

void SparsityBudget::validate() const {
  if (!(s_w > 0.0 && s_w <= 1.0) || !(s_u > 0.0 && s_u <= 1.0)) {
    throw ConfigError("sparsity fractions must lie in (0, 1]");
  }
}

FastGrnnParams init_fastgrnn(std::size_t input, std::size_t hidden, RngState& rng) {
  if (input == 0 || hidden == 0) throw ConfigError("FastGRNN sizes must be positive");
  FastGrnnParams p;
  p.W = Tensor(Shape{hidden, input}, 0.0);
  p.U = Tensor(Shape{hidden, hidden}, 0.0);
  const double sw = 1.0 / std::sqrt(static_cast<double>(input));
  const double su = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& v : p.W.storage()) v = rng.normal(0.0, sw);
  for (auto& v : p.U.storage()) v = rng.normal(0.0, su);
  p.b_z = Tensor(Shape{hidden}, 0.0);
  p.b_h = Tensor(Shape{hidden}, 0.0);
  p.zeta_raw = Tensor(Shape{1}, 1.0);
  p.nu_raw = Tensor(Shape{1}, 1.0);
  return p;
}

Tensor cell_step(const FastGrnnParams& p, const Tensor& x, const Tensor& h_prev) {
  p.validate();
  const std::size_t H = p.hidden(), D = p.input();
  if (x.shape() != Shape{D}) throw DimensionError("cell_step: x must have length " + std::to_string(D));
  if (h_prev.shape() != Shape{H}) throw DimensionError("cell_step: h_prev must have length " + std::to_string(H));
  const double zeta = p.zeta(), nu = p.nu();
  Tensor h(Shape{H}, 0.0);
  for (std::size_t i = 0; i < H; ++i) {
    double pre = 0.0;
    for (std::size_t j = 0; j < D; ++j) pre += p.W.at(i, j) * x[j];
    for (std::size_t j = 0; j < H; ++j) pre += p.U.at(i, j) * h_prev[j];
    const double z = sigmoid_value(pre + p.b_z[i]);
    const double cand = std::tanh(pre + p.b_h[i]);
    h[i] = (zeta * (1.0 - z) + nu) * cand + z * h_prev[i];
  }
  return h;
}

Tensor run_sequence(const FastGrnnParams& p, const Tensor& X, const Tensor& h0) {
  p.validate();
  if (X.rank() != 2 || X.dim(0) != p.input()) {
    throw DimensionError("run_sequence: X must be " + std::to_string(p.input()) + " x T, got " + shape_string(X.shape()));
  }
  Tensor h = h0.empty() ? Tensor(Shape{p.hidden()}, 0.0) : h0;
  const std::size_t D = X.dim(0), T = X.dim(1);
  Tensor x(Shape{D}, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < D; ++j) x[j] = X.at(j, t);
    h = cell_step(p, x, h);
  }
  return h;
}

Tensor dimension_shuffle(const Tensor& X) {
  if (X.rank() != 2) throw DimensionError("dimension_shuffle expects a matrix, got " + shape_string(X.shape()));
  const std::size_t M = X.dim(0), Q = X.dim(1);
  Tensor out(Shape{Q, M}, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < Q; ++j) out.at(j, i) = X.at(i, j);
  return out;
}

std::size_t sparse_keep_count(double s, std::size_t n) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("sparsity fraction must lie in (0, 1]");
  // Guard the ceil against products like 0.25 * 64 = 16.000000000000004.
  const double exact = s * static_cast<double>(n);
  std::size_t k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(k, 1, n);
}

void project_sparse_inplace(Tensor& m, double s) {
  const std::size_t n = m.numel();
  const std::size_t keep = sparse_keep_count(s, n);
  if (keep >= n) return;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto d = m.data();
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ma = std::abs(d[a]), mb = std::abs(d[b]);
                     return ma != mb ? ma > mb : a < b;
                   });
  std::vector<char> kept(n, 0);
  for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = 1;
  for (std::size_t i = 0; i < n; ++i)
    if (!kept[i]) d[i] = 0.0;
}

FastGrnnParams project_sparse(FastGrnnParams p, const SparsityBudget& budget) {
  budget.validate();
  project_sparse_inplace(p.W, budget.s_w);
  project_sparse_inplace(p.U, budget.s_u);
  return p;
}

Var cell_step(const FastGrnnVars& p, Var Wt, Var Ut, Var x, Var h) {
  Var pre = add(matmul(x, Wt), matmul(h, Ut));
  Var z = sigmoid(add_row_bias(pre, p.b_z));
  Var cand = tanh(add_row_bias(pre, p.b_h));
  Var zeta = sigmoid(p.zeta_raw);
  Var nu = sigmoid(p.nu_raw);
  Var mix = add_scalar(scale_by(zeta, one_minus(z)), nu);
  return add(hadamard(mix, cand), hadamard(z, h));
}

Var run_sequence(const FastGrnnVars& p, Var X, Var h0) {
  if (X.shape().size() != 3) throw DimensionError("run_sequence expects (B x D x S), got " + shape_string(X.shape()));
  Var Wt = transpose(p.W);
  Var Ut = transpose(p.U);
  Var h = h0;
  for (std::size_t t = 0; t < X.shape()[2]; ++t) h = cell_step(p, Wt, Ut, take_step(X, t), h);
  return h;
}

}  // namespace floodcast
