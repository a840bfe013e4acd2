// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "factscribe/tensor.hpp"

namespace factscribe {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for an ordered parameter list.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step = 0;

  AdamState() = default;
  AdamState(std::span<Tensor* const> params, AdamConfig cfg);
};

/// One bias-corrected Adam update using each tensor's accumulated grad().
/// Checks every gradient before touching any parameter; a non-finite entry
/// throws NumericError naming the tensor and leaves all state unchanged.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace factscribe
