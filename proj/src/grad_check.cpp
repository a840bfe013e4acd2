// SPDX-License-Identifier: Apache-2.0
#include "factscribe/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "factscribe/errors.hpp"

namespace factscribe {

GradCheckResult grad_check(const LossBuilder& loss, std::span<Tensor* const> params, double perturbation,
                           double floor) {
  if (!(perturbation > 0.0)) throw ContractError("grad_check: perturbation must be positive");

  for (Tensor* p : params) p->zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) analytic.push_back(p->grad());

  auto evaluate = [&loss] {
    Tape tape(false);
    return loss(tape).scalar();
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (Index i = 0; i < p.size(); ++i) {
      double& x = p.value().data()[i];
      const double saved = x;
      x = saved + perturbation;
      const double up = evaluate();
      x = saved - perturbation;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * perturbation);
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (result.worst_index < 0 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name();
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace factscribe
