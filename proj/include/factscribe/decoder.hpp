// SPDX-License-Identifier: Apache-2.0
//
// Sequence decoder. At every step the previous GRU state scores the N facts
// plus the mean fact; the arg-max slot decides the output head. The mean fact
// routes to a softmax over the vocabulary, any other fact to a softmax over
// copy positions inside that fact's factual words.
#pragma once

#include <string>
#include <vector>

#include "factscribe/alignment.hpp"
#include "factscribe/corpus.hpp"
#include "factscribe/encoder.hpp"
#include "factscribe/model.hpp"
#include "factscribe/tensor.hpp"

namespace factscribe {

/// Model tensors bound as leaves on one tape.
struct DecoderWeights {
  Var embedding;
  Var attn_w1_fact;    // m x d block of W1
  Var attn_w1_hidden;  // m x H block of W1
  Var attn_b1;
  Var attn_w2;
  Var gru_wx, gru_uzr, gru_un, gru_b;
  Var vocab_wb, vocab_bb, vocab_wa, vocab_ba;
  Var copy_wd, copy_bd, copy_wc, copy_bc;
  int embedding_dim = 0;
  int hidden_dim = 0;
  int copy_positions = 0;
};

/// Trainable binding: backward() accumulates into params' gradients.
DecoderWeights bind_weights(Tape& tape, ModelParams& params, const ModelConfig& config);
/// Read-only binding for inference.
DecoderWeights bind_weights(Tape& tape, const ModelParams& params, const ModelConfig& config);

/// W1_fact F + b1 for every slot: m x (N+1). Constant across decode steps.
Var project_facts(const DecoderWeights& w, Var facts);

/// Attention distribution over slots as a row vector, zero on masked slots.
Var fact_attention(const DecoderWeights& w, Var projected_facts, Var h_prev, const Mask& mask);
Var fact_attention_from_facts(const DecoderWeights& w, Var facts, Var h_prev, const Mask& mask);

/// Arg-max over all entries (vector of either orientation); the lowest index wins ties.
int select_fact(const Matrix& alpha);

/// GRU update with z and r gates; h = h_prev + z * (candidate - h_prev).
Var gru_step(const DecoderWeights& w, Var x, Var h_prev);
/// Builds x = [f_t; w_prev; v_prev] and runs gru_step.
Var decoder_step(const DecoderWeights& w, Var fact, Var word_prev, Var copy_prev, Var h_prev);

/// Softmax(W_a ReLU(W_b [c; h] + b_b) + b_a) over the whole vocabulary.
Var vocab_distribution(const DecoderWeights& w, Var context, Var h);
/// Softmax(W_c ReLU(W_d [f; h] + b_d) + b_c) restricted to the first n_words positions.
Var copy_distribution(const DecoderWeights& w, Var fact, Var h, int n_words);

struct DecodeStep {
  std::string token;  // emitted word; specials keep their surface form
  AlignSource source = AlignSource::Vocab;
  int slot = -1;
  int position = -1;  // copy position, -1 for vocabulary steps
  Vector alpha;       // attention over the N+1 slots actually used for selection
  Mask mask;          // slots selectable at this step
};

struct DecodeResult {
  Tokens tokens;  // without <UNK>, <SOS> and <EOS>
  std::vector<DecodeStep> steps;
};

/// Greedy decoding without teacher forcing; stops at <EOS> or after max_len steps.
DecodeResult greedy_decode(const Model& model, const Entity& entity, int max_len);

/// Decodes every entity; `threads` > 1 splits the work across std::threads.
std::vector<Tokens> decode_all(const Model& model, std::span<const Entity> entities, int max_len, int threads = 1);

}  // namespace factscribe
