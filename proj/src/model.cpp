// SPDX-License-Identifier: Apache-2.0
#include "factscribe/model.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "factscribe/errors.hpp"

namespace factscribe {

const char* encoding_mode_name(EncodingMode mode) noexcept {
  return mode == EncodingMode::Positional ? "positional" : "mean_pool";
}

const char* mean_fact_mode_name(MeanFactMode mode) noexcept {
  return mode == MeanFactMode::Mean ? "mean" : "fixed_random";
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(embedding_dim, "embedding_dim");
  positive(hidden_dim, "hidden_dim");
  positive(attention_dim, "attention_dim");
  positive(head_dim, "head_dim");
  positive(copy_positions, "copy_positions");
  positive(max_phrase_length, "max_phrase_length");
  if (vocab_size < 3) throw ConfigError("vocab_size must include the three special tokens");
}

std::vector<TensorSpec> parameter_specs(const ModelConfig& c) {
  const Index d = c.embedding_dim, h = c.hidden_dim, m = c.attention_dim, hh = c.head_dim;
  const Index v = c.vocab_size, p = c.copy_positions, in = c.gru_input_dim();
  return {
      {"embedding.words", v, d, InitKind::Embedding},
      {"attention.w1", m, d + h, InitKind::Weight},
      {"attention.b1", m, 1, InitKind::Bias},
      {"attention.w2", 1, m, InitKind::Weight},
      {"gru.w_input", 3 * h, in, InitKind::Weight},
      {"gru.w_hidden_gates", 2 * h, h, InitKind::Weight},
      {"gru.w_hidden_candidate", h, h, InitKind::Weight},
      {"gru.bias", 3 * h, 1, InitKind::Bias},
      {"vocab_head.wb", hh, d + h, InitKind::Weight},
      {"vocab_head.bb", hh, 1, InitKind::Bias},
      {"vocab_head.wa", v, hh, InitKind::Weight},
      {"vocab_head.ba", v, 1, InitKind::Bias},
      {"copy_head.wd", hh, d + h, InitKind::Weight},
      {"copy_head.bd", hh, 1, InitKind::Bias},
      {"copy_head.wc", p, hh, InitKind::Weight},
      {"copy_head.bc", p, 1, InitKind::Bias},
  };
}

ParameterCount count_parameters(const ModelConfig& config) {
  config.validate();
  ParameterCount out;
  out.tensors = parameter_specs(config);
  for (const auto& t : out.tensors) out.total += t.count();
  return out;
}

std::string format_parameter_table(const ParameterCount& count) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "tensor" << std::setw(14) << "shape" << std::right << std::setw(10)
     << "count" << '\n';
  for (const auto& t : count.tensors) {
    os << std::left << std::setw(26) << t.name << std::setw(14) << shape_string(t.rows, t.cols) << std::right
       << std::setw(10) << t.count() << '\n';
  }
  os << std::left << std::setw(40) << "total" << std::right << std::setw(10) << count.total << '\n';
  return os.str();
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config.validate();
  const auto specs = parameter_specs(config);
  auto dst = slots();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    *dst[i] = Tensor(specs[i].name, Matrix::Zero(specs[i].rows, specs[i].cols), true);
  }
  if (config.mean_fact == MeanFactMode::FixedRandom) {
    fixed_mean_fact = Tensor(kFixedMeanFactName, Matrix::Zero(config.embedding_dim, 1), false);
  }
}

std::vector<Tensor*> ModelParams::slots() {
  return {&embedding, &attn_w1,  &attn_b1,  &attn_w2,  &gru_wx,  &gru_uzr, &gru_un,  &gru_b,
          &vocab_wb,  &vocab_bb, &vocab_wa, &vocab_ba, &copy_wd, &copy_bd, &copy_wc, &copy_bc};
}

void ModelParams::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto specs = parameter_specs(config_);
  auto dst = slots();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Matrix& w = dst[i]->value();
    double bound = 0.0;
    switch (specs[i].init) {
      case InitKind::Bias: bound = 0.0; break;
      case InitKind::Embedding: bound = 0.1; break;
      case InitKind::Weight: bound = 1.0 / std::sqrt(static_cast<double>(w.cols())); break;
    }
    if (bound == 0.0) {
      w.setZero();
      continue;
    }
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
  }
  if (fixed_mean_fact.size() > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.embedding_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index r = 0; r < fixed_mean_fact.rows(); ++r) fixed_mean_fact.value()(r, 0) = u(rng);
  }
  zero_grad();
}

std::vector<Tensor*> ModelParams::learnable() { return slots(); }

std::vector<const Tensor*> ModelParams::learnable() const {
  auto s = const_cast<ModelParams*>(this)->slots();
  return {s.begin(), s.end()};
}

std::vector<const Tensor*> ModelParams::all() const {
  auto out = learnable();
  if (fixed_mean_fact.size() > 0) out.push_back(&fixed_mean_fact);
  return out;
}

Tensor* ModelParams::find(const std::string& name) {
  for (Tensor* t : slots()) {
    if (t->name() == name) return t;
  }
  if (fixed_mean_fact.size() > 0 && fixed_mean_fact.name() == name) return &fixed_mean_fact;
  return nullptr;
}

void ModelParams::zero_grad() {
  for (Tensor* t : slots()) t->zero_grad();
}

}  // namespace factscribe
