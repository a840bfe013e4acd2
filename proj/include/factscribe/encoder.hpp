// SPDX-License-Identifier: Apache-2.0
//
// Fact encoder: each fact phrase (property tokens followed by value tokens)
// becomes one d-dimensional vector, and a mean fact is appended as slot N.
#pragma once

#include <span>
#include <vector>

#include "factscribe/corpus.hpp"
#include "factscribe/model.hpp"
#include "factscribe/tensor.hpp"

namespace factscribe {

/// l(k, j) = (1 - j/J) - (k/d)(1 - 2j/J) with 1-indexed k and j; d x J.
Matrix positional_weights(int phrase_length, int dim);

/// Vocabulary ids of every fact phrase, concatenated, plus per-fact sizes.
struct EncoderInput {
  std::vector<int> phrase_ids;
  std::vector<int> phrase_lengths;
  std::vector<int> factual_counts;

  int fact_count() const noexcept { return static_cast<int>(phrase_lengths.size()); }
};

/// Out-of-vocabulary phrase words map to <UNK>; phrases are cut to max_phrase_length.
EncoderInput prepare_encoder_input(const Entity& entity, const Vocabulary& vocab, int max_phrase_length);

struct EncodedEntity {
  Var facts;  // d x (N + 1); column N is the mean fact
  int fact_count = 0;
  std::vector<int> factual_counts;
  Mask mask;  // N + 1 selectable slots

  int mean_slot() const noexcept { return fact_count; }
  /// Mask widened to a fixed slot count; slots past N + 1 are false.
  Mask padded_mask(int slots) const;
};

/// Embeds one phrase: positionally weighted sum, or mean in MeanPool mode.
Var encode_fact(Var embeddings, std::span<const int> phrase_ids, const EncoderConfig& config);

/// `fixed_mean_fact` must be supplied in FixedRandom mode; it enters as a constant.
EncodedEntity encode_entity(Var embeddings, const EncoderInput& input, const EncoderConfig& config,
                            const Tensor* fixed_mean_fact = nullptr);

}  // namespace factscribe
