// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>

#include "factscribe/tensor.hpp"

namespace factscribe {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Index checked = 0;
};

/// Builds the scalar loss on the given tape from the leaves it binds.
using LossBuilder = std::function<Var(Tape&)>;

/// Entrywise comparison of tape gradients with central differences
/// (f(x+h) - f(x-h)) / 2h. Relative error is |a - n| / max(|a|, |n|, floor);
/// the floor keeps gradients that are zero up to rounding from dominating.
GradCheckResult grad_check(const LossBuilder& loss, std::span<Tensor* const> params, double perturbation,
                           double floor = 1e-6);

}  // namespace factscribe
