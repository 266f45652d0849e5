#pragma once

#include <functional>
#include <span>
#include <vector>

#include "floodcast/tensor/tape.hpp"

namespace floodcast {

// Builds a scalar on `tape` from leaves bound to the parameters, in order.
using ScalarGraph = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t param = 0;  // where the worst coordinate lives
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences (f(p+h) - f(p-h)) / 2h for every coordinate, compared with
// the tape gradient as |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check_detailed(const ScalarGraph& f, std::vector<Tensor> params, double step);

inline double grad_check(const ScalarGraph& f, std::vector<Tensor> params, double step) {
  return grad_check_detailed(f, std::move(params), step).max_rel_error;
}

}  // namespace floodcast
