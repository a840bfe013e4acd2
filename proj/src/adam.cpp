// SPDX-License-Identifier: Apache-2.0
#include "factscribe/adam.hpp"

#include <cmath>
#include <string>

#include "factscribe/errors.hpp"

namespace factscribe {

AdamState::AdamState(std::span<Tensor* const> params, AdamConfig cfg) : config(cfg) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  const AdamConfig& c = state.config;
  if (!(c.learning_rate > 0.0)) throw ConfigError("adam: learning_rate must be positive");
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw ContractError("adam: state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (state.first_moment[i].rows() != p.rows() || state.first_moment[i].cols() != p.cols() ||
        p.grad().rows() != p.rows() || p.grad().cols() != p.cols()) {
      throw ShapeError("adam: shape mismatch for parameter '" + p.name() + "'");
    }
    if (!p.grad().allFinite()) {
      throw NumericError("training diverged: non-finite gradient in parameter '" + p.name() + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    const Matrix& g = p.grad();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
    p.value().array() -=
        c.learning_rate * (m.array() / correction1) / ((v.array() / correction2).sqrt() + c.epsilon);
  }
}

}  // namespace factscribe
