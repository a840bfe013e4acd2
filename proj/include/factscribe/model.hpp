// SPDX-License-Identifier: Apache-2.0
//
// Learnable state of the fact-to-sequence model and its shape bookkeeping.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factscribe/corpus.hpp"
#include "factscribe/tensor.hpp"

namespace factscribe {

enum class EncodingMode { Positional, MeanPool };
enum class MeanFactMode { Mean, FixedRandom };

const char* encoding_mode_name(EncodingMode mode) noexcept;
const char* mean_fact_mode_name(MeanFactMode mode) noexcept;

struct EncoderConfig {
  int embedding_dim = 100;
  EncodingMode encoding = EncodingMode::Positional;
  MeanFactMode mean_fact = MeanFactMode::Mean;
  int max_phrase_length = 60;
};

struct ModelConfig {
  int embedding_dim = 100;   // d: fact and word embeddings
  int hidden_dim = 100;      // H: GRU state
  int attention_dim = 100;   // m: fact-selection hidden layer
  int head_dim = 100;        // H': vocabulary and copy head hidden layers
  int vocab_size = 1003;     // |V| including the three specials
  int copy_positions = 60;   // P_max: copy one-hot width
  int max_phrase_length = 60;
  EncodingMode encoding = EncodingMode::Positional;
  MeanFactMode mean_fact = MeanFactMode::Mean;
  bool copy_only = false;

  int gru_input_dim() const noexcept { return 2 * embedding_dim + copy_positions; }
  EncoderConfig encoder() const { return {embedding_dim, encoding, mean_fact, max_phrase_length}; }
  void validate() const;
};

enum class InitKind { Weight, Bias, Embedding };

struct TensorSpec {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  InitKind init = InitKind::Weight;

  long count() const noexcept { return static_cast<long>(rows * cols); }
};

/// Every learnable tensor in canonical order.
std::vector<TensorSpec> parameter_specs(const ModelConfig& config);

struct ParameterCount {
  std::vector<TensorSpec> tensors;
  long total = 0;
};

/// Closed-form learnable-parameter count over parameter_specs().
ParameterCount count_parameters(const ModelConfig& config);

/// Aligned text table: name, shape, count; ends with the total.
std::string format_parameter_table(const ParameterCount& count);

class ModelParams {
 public:
  ModelParams() = default;
  /// Zero-valued tensors with the configured shapes.
  explicit ModelParams(const ModelConfig& config);

  /// Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, embeddings
  /// U(-0.1, 0.1); the fixed mean fact, when configured, U(-1/sqrt(d), 1/sqrt(d)).
  void initialize(std::uint64_t seed);

  std::vector<Tensor*> learnable();
  std::vector<const Tensor*> learnable() const;
  /// Learnable tensors plus the fixed mean fact when present.
  std::vector<const Tensor*> all() const;
  Tensor* find(const std::string& name);

  void zero_grad();

  Tensor embedding;  // |V| x d
  Tensor attn_w1;    // m x (d + H)
  Tensor attn_b1;    // m
  Tensor attn_w2;    // 1 x m
  Tensor gru_wx;     // 3H x (2d + P): update, reset, candidate rows
  Tensor gru_uzr;    // 2H x H
  Tensor gru_un;     // H x H
  Tensor gru_b;      // 3H
  Tensor vocab_wb;   // H' x (d + H)
  Tensor vocab_bb;   // H'
  Tensor vocab_wa;   // |V| x H'
  Tensor vocab_ba;   // |V|
  Tensor copy_wd;    // H' x (d + H)
  Tensor copy_bd;    // H'
  Tensor copy_wc;    // P x H'
  Tensor copy_bc;    // P
  Tensor fixed_mean_fact;  // d, not trained; empty unless MeanFactMode::FixedRandom

 private:
  std::vector<Tensor*> slots();
  ModelConfig config_;
};

inline constexpr const char* kFixedMeanFactName = "encoder.fixed_mean_fact";

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  ModelParams params;
};

}  // namespace factscribe
