#include "floodcast/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floodcast/errors.hpp"

namespace floodcast {

namespace {

double evaluate(const ScalarGraph& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(tape.leaf(p));
  const Var root = f(tape, leaves);
  if (root.value().numel() != 1) throw ContractError("grad_check: function must return a scalar");
  const double v = root.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check_detailed(const ScalarGraph& f, std::vector<Tensor> params, double step) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw ConfigError("grad_check: step must lie in (0, 1e-2], got " + std::to_string(step));
  }

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& p : params) leaves.push_back(tape.leaf(p));
    const Var root = f(tape, leaves);
    if (!std::isfinite(root.value()[0])) throw NumericError("grad_check: function value is not finite");
    tape.backward(root);
    for (const auto& l : leaves) analytic.push_back(l.grad());
  }

  GradCheckResult worst;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].numel(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + step;
      const double up = evaluate(f, params);
      params[p][i] = saved - step;
      const double down = evaluate(f, params);
      params[p][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      if (err > worst.max_rel_error) worst = {err, p, i, a, numeric};
    }
  }
  return worst;
}

}  // namespace floodcast
