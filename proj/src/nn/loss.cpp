#include "floodcast/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "floodcast/errors.hpp"

namespace floodcast {

namespace {

void check(const Tensor& P, std::span<const int> targets, double w) {
  if (P.rank() != 2 || P.dim(1) != 2) throw DimensionError("weighted_cross_entropy expects B x 2 probabilities");
  if (P.dim(0) != targets.size()) throw ContractError("weighted_cross_entropy: one target per row required");
  if (!(w > 0.0)) throw ConfigError("loss weight must be positive");
  for (int y : targets)
    if (y != 0 && y != 1) throw ContractError("weighted_cross_entropy: targets must be 0 or 1");
}

}  // namespace

double weighted_cross_entropy_value(const Tensor& P, std::span<const int> targets, double w) {
  check(P, targets, w);
  double acc = 0.0;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    const double p = P.at(b, 1);
    acc += targets[b] ? -w * std::log(std::max(p, kLogClamp)) : -std::log(std::max(1.0 - p, kLogClamp));
  }
  return acc / static_cast<double>(targets.size());
}

Var weighted_cross_entropy(Var probs, std::span<const int> targets, double w) {
  const Tensor& P = probs.value();
  const double value = weighted_cross_entropy_value(P, targets, w);
  std::vector<int> y(targets.begin(), targets.end());
  return probs.tape().record(
      "weighted_cross_entropy", Tensor::scalar(value), {probs.id()},
      [y = std::move(y), w](const Tape& t, const Node& self, const Tensor& g, std::span<Tensor* const> adj) {
        const Tensor& P = t.value(self.inputs[0]);
        const double k = g[0] / static_cast<double>(y.size());
        Tensor& d = *adj[0];
        for (std::size_t b = 0; b < y.size(); ++b) {
          const double p = P.at(b, 1);
          // Clamped logs are flat, so their derivative is zero.
          if (y[b]) {
            if (p > kLogClamp) d.at(b, 1) += -w * k / p;
          } else if (1.0 - p > kLogClamp) {
            d.at(b, 1) += k / (1.0 - p);
          }
        }
      });
}

}  // namespace floodcast
