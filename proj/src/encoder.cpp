// SPDX-License-Identifier: Apache-2.0
#include "factscribe/encoder.hpp"

#include <algorithm>

#include "factscribe/errors.hpp"

namespace factscribe {

Matrix positional_weights(int phrase_length, int dim) {
  if (phrase_length < 1 || dim < 1) {
    throw ContractError("positional_weights: phrase length and dimension must be >= 1");
  }
  const double J = phrase_length, d = dim;
  Matrix l(dim, phrase_length);
  for (int k = 1; k <= dim; ++k) {
    for (int j = 1; j <= phrase_length; ++j) {
      l(k - 1, j - 1) = (1.0 - j / J) - (k / d) * (1.0 - 2.0 * j / J);
    }
  }
  return l;
}

EncoderInput prepare_encoder_input(const Entity& entity, const Vocabulary& vocab, int max_phrase_length) {
  EncoderInput in;
  for (const Fact& f : entity.facts) {
    int len = 0;
    auto take = [&](const Tokens& toks) {
      for (const auto& t : toks) {
        if (len >= max_phrase_length) return;
        in.phrase_ids.push_back(vocab.index_or_unk(t));
        ++len;
      }
    };
    take(f.property_tokens);
    take(f.value_tokens);
    if (len == 0) throw ContractError("entity " + entity.id + ": fact '" + f.label() + "' has an empty phrase");
    in.phrase_lengths.push_back(len);
    in.factual_counts.push_back(static_cast<int>(f.factual_words.size()));
  }
  if (in.phrase_lengths.empty()) throw ContractError("entity " + entity.id + " has no facts");
  return in;
}

Mask EncodedEntity::padded_mask(int slots) const {
  Mask out(static_cast<std::size_t>(std::max(slots, 0)), false);
  for (std::size_t i = 0; i < mask.size() && i < out.size(); ++i) out[i] = mask[i];
  return out;
}

namespace {

// Column weights applied before the per-fact segment sum.
Matrix phrase_weights(std::span<const int> lengths, const EncoderConfig& config) {
  Index total = 0;
  for (int len : lengths) total += len;
  Matrix w(config.embedding_dim, total);
  Index c = 0;
  for (int len : lengths) {
    if (config.encoding == EncodingMode::Positional) {
      w.middleCols(c, len) = positional_weights(len, config.embedding_dim);
    } else {
      w.middleCols(c, len).setConstant(1.0 / len);
    }
    c += len;
  }
  return w;
}

}  // namespace

Var encode_fact(Var embeddings, std::span<const int> phrase_ids, const EncoderConfig& config) {
  if (phrase_ids.empty()) throw ContractError("encode_fact: empty phrase");
  const int len = static_cast<int>(phrase_ids.size());
  Tape& tape = embeddings.tape();
  Var words = embedding(embeddings, phrase_ids);
  Var weighted = mul(words, tape.constant(phrase_weights(std::span<const int>(&len, 1), config)));
  return segment_sum(weighted, std::span<const int>(&len, 1));
}

EncodedEntity encode_entity(Var embeddings, const EncoderInput& input, const EncoderConfig& config,
                            const Tensor* fixed_mean_fact) {
  if (input.fact_count() < 1) throw ContractError("encode_entity: entity has no facts");
  if (embeddings.cols() != config.embedding_dim) {
    throw ShapeError("encode_entity: embeddings " + shape_string(embeddings.rows(), embeddings.cols()) +
                     " do not match embedding_dim " + std::to_string(config.embedding_dim));
  }
  Tape& tape = embeddings.tape();
  Var words = embedding(embeddings, input.phrase_ids);
  Var weighted = mul(words, tape.constant(phrase_weights(input.phrase_lengths, config)));
  Var facts = segment_sum(weighted, input.phrase_lengths);

  Var mean;
  if (config.mean_fact == MeanFactMode::Mean) {
    mean = row_mean(facts);
  } else {
    if (!fixed_mean_fact || fixed_mean_fact->rows() != config.embedding_dim || fixed_mean_fact->cols() != 1) {
      throw ContractError("encode_entity: fixed_random mode needs a d x 1 fixed mean fact");
    }
    mean = tape.leaf(*fixed_mean_fact);
  }

  EncodedEntity out;
  out.facts = hconcat({facts, mean});
  out.fact_count = input.fact_count();
  out.factual_counts = input.factual_counts;
  out.mask.assign(static_cast<std::size_t>(out.fact_count + 1), true);
  return out;
}

}  // namespace factscribe
