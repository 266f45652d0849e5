#pragma once

#include <cmath>
#include <vector>

#include "floodcast/floodgen/dataset.hpp"
#include "floodcast/tensor/rng.hpp"
#include "floodcast/tensor/tensor.hpp"

namespace floodcast::test {

inline Tensor random_tensor(const Shape& shape, RngState& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

// Like random_tensor but every entry has |x| >= gap, away from the ReLU kink.
inline Tensor random_away_from_zero(const Shape& shape, RngState& rng, double gap = 1e-3) {
  Tensor t(shape);
  for (auto& v : t.storage()) {
    const double mag = rng.uniform(gap, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// `copies` copies each of one positive and one negative sample that differ in
// every entry, so any reasonable classifier can separate them.
inline Dataset separable_toy(std::size_t variables, std::size_t window, std::size_t copies, std::uint64_t seed) {
  RngState rng(seed);
  Tensor pos(Shape{variables, window}), neg(Shape{variables, window});
  for (std::size_t i = 0; i < pos.numel(); ++i) {
    pos[i] = 1.0 + 0.2 * rng.normal();
    neg[i] = -1.0 + 0.2 * rng.normal();
  }
  Dataset d;
  for (std::size_t c = 0; c < copies; ++c) {
    d.push_back(Sample{pos, 1, "P", 0});
    d.push_back(Sample{neg, 0, "N", 0});
  }
  return d;
}

}  // namespace floodcast::test
