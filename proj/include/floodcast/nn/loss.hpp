#pragma once

#include <span>

#include "floodcast/tensor/tape.hpp"

namespace floodcast {

inline constexpr double kLogClamp = 1e-12;

// Mean over the batch of
//   -( w * y * log(p) + (1 - y) * log(1 - p) )
// where p = probs[:, 1]; log arguments are clamped below at kLogClamp.
Var weighted_cross_entropy(Var probs, std::span<const int> targets, double w);
double weighted_cross_entropy_value(const Tensor& probs, std::span<const int> targets, double w);

}  // namespace floodcast
