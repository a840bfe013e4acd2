// SPDX-License-Identifier: Apache-2.0
#include "factscribe/decoder.hpp"

#include <algorithm>
#include <thread>

#include "factscribe/errors.hpp"

namespace factscribe {
namespace {

template <typename Params>
DecoderWeights bind_impl(Tape& tape, Params& p, const ModelConfig& c) {
  DecoderWeights w;
  w.embedding_dim = c.embedding_dim;
  w.hidden_dim = c.hidden_dim;
  w.copy_positions = c.copy_positions;
  w.embedding = tape.leaf(p.embedding);
  Var w1 = tape.leaf(p.attn_w1);
  w.attn_w1_fact = slice_cols(w1, 0, c.embedding_dim);
  w.attn_w1_hidden = slice_cols(w1, c.embedding_dim, c.hidden_dim);
  w.attn_b1 = tape.leaf(p.attn_b1);
  w.attn_w2 = tape.leaf(p.attn_w2);
  w.gru_wx = tape.leaf(p.gru_wx);
  w.gru_uzr = tape.leaf(p.gru_uzr);
  w.gru_un = tape.leaf(p.gru_un);
  w.gru_b = tape.leaf(p.gru_b);
  w.vocab_wb = tape.leaf(p.vocab_wb);
  w.vocab_bb = tape.leaf(p.vocab_bb);
  w.vocab_wa = tape.leaf(p.vocab_wa);
  w.vocab_ba = tape.leaf(p.vocab_ba);
  w.copy_wd = tape.leaf(p.copy_wd);
  w.copy_bd = tape.leaf(p.copy_bd);
  w.copy_wc = tape.leaf(p.copy_wc);
  w.copy_bc = tape.leaf(p.copy_bc);
  return w;
}

Var affine(Var weight, Var bias, Var x) { return add(matmul(weight, x), bias); }

}  // namespace

DecoderWeights bind_weights(Tape& tape, ModelParams& params, const ModelConfig& config) {
  return bind_impl(tape, params, config);
}

DecoderWeights bind_weights(Tape& tape, const ModelParams& params, const ModelConfig& config) {
  return bind_impl(tape, params, config);
}

Var project_facts(const DecoderWeights& w, Var facts) {
  return add_column(matmul(w.attn_w1_fact, facts), w.attn_b1);
}

Var fact_attention(const DecoderWeights& w, Var projected_facts, Var h_prev, const Mask& mask) {
  if (h_prev.rows() != w.hidden_dim || h_prev.cols() != 1) {
    throw ShapeError("fact_attention: hidden state " + shape_string(h_prev.rows(), h_prev.cols()) +
                     " does not match hidden_dim " + std::to_string(w.hidden_dim));
  }
  if (static_cast<Index>(mask.size()) != projected_facts.cols()) {
    throw ShapeError("fact_attention: mask has " + std::to_string(mask.size()) + " slots for " +
                     std::to_string(projected_facts.cols()) + " facts");
  }
  Var hidden = tanh(add_column(projected_facts, matmul(w.attn_w1_hidden, h_prev)));
  Var energies = matmul(w.attn_w2, hidden);
  return masked_softmax(energies, mask);
}

Var fact_attention_from_facts(const DecoderWeights& w, Var facts, Var h_prev, const Mask& mask) {
  return fact_attention(w, project_facts(w, facts), h_prev, mask);
}

int select_fact(const Matrix& alpha) {
  if (alpha.size() == 0) throw ContractError("select_fact: empty distribution");
  const double* v = alpha.data();
  Index best = 0;
  for (Index i = 1; i < alpha.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

Var gru_step(const DecoderWeights& w, Var x, Var h_prev) {
  const Index h = w.hidden_dim;
  if (x.cols() != 1 || x.rows() != w.gru_wx.cols()) {
    throw ShapeError("gru_step: input " + shape_string(x.rows(), x.cols()) + " expected " +
                     shape_string(w.gru_wx.cols(), 1));
  }
  if (h_prev.cols() != 1 || h_prev.rows() != h) {
    throw ShapeError("gru_step: state " + shape_string(h_prev.rows(), h_prev.cols()) + " expected " +
                     shape_string(h, 1));
  }
  Var gx = affine(w.gru_wx, w.gru_b, x);
  Var gh = matmul(w.gru_uzr, h_prev);
  Var z = sigmoid(slice_rows(gx, 0, h) + slice_rows(gh, 0, h));
  Var r = sigmoid(slice_rows(gx, h, h) + slice_rows(gh, h, h));
  Var candidate = tanh(slice_rows(gx, 2 * h, h) + matmul(w.gru_un, mul(r, h_prev)));
  return h_prev + mul(z, candidate - h_prev);
}

Var decoder_step(const DecoderWeights& w, Var fact, Var word_prev, Var copy_prev, Var h_prev) {
  if (fact.rows() != w.embedding_dim || word_prev.rows() != w.embedding_dim ||
      copy_prev.rows() != w.copy_positions) {
    throw ShapeError("decoder_step: x = [f; w; v] must be " + std::to_string(w.embedding_dim) + " + " +
                     std::to_string(w.embedding_dim) + " + " + std::to_string(w.copy_positions) + " rows");
  }
  return gru_step(w, vconcat({fact, word_prev, copy_prev}), h_prev);
}

Var vocab_distribution(const DecoderWeights& w, Var context, Var h) {
  Var in = vconcat({context, h});
  if (in.rows() != w.vocab_wb.cols()) {
    throw ShapeError("vocab_distribution: [c; h] has " + std::to_string(in.rows()) + " rows, head expects " +
                     std::to_string(w.vocab_wb.cols()));
  }
  Var logits = affine(w.vocab_wa, w.vocab_ba, relu(affine(w.vocab_wb, w.vocab_bb, in)));
  return masked_softmax(logits, Mask(static_cast<std::size_t>(logits.rows()), true));
}

Var copy_distribution(const DecoderWeights& w, Var fact, Var h, int n_words) {
  if (n_words < 1) throw ContractError("copy head: selected fact has no factual words to copy");
  if (n_words > w.copy_positions) {
    throw ContractError("copy head: " + std::to_string(n_words) + " factual words exceed " +
                        std::to_string(w.copy_positions) + " copy positions");
  }
  Var in = vconcat({fact, h});
  if (in.rows() != w.copy_wd.cols()) {
    throw ShapeError("copy_distribution: [f; h] has " + std::to_string(in.rows()) + " rows, head expects " +
                     std::to_string(w.copy_wd.cols()));
  }
  Var logits = affine(w.copy_wc, w.copy_bc, relu(affine(w.copy_wd, w.copy_bd, in)));
  Mask mask(static_cast<std::size_t>(w.copy_positions), false);
  std::fill(mask.begin(), mask.begin() + n_words, true);
  return masked_softmax(logits, mask);
}

DecodeResult greedy_decode(const Model& model, const Entity& entity, int max_len) {
  const ModelConfig& cfg = model.config;
  if (max_len < 0) throw ContractError("greedy_decode: max_len must be non-negative");
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, cfg);
  const EncoderInput input = prepare_encoder_input(entity, model.vocab, cfg.max_phrase_length);
  const EncodedEntity enc =
      encode_entity(w.embedding, input, cfg.encoder(), cfg.mean_fact == MeanFactMode::FixedRandom
                                                           ? &model.params.fixed_mean_fact
                                                           : nullptr);
  Var projected = project_facts(w, enc.facts);
  const int n = enc.fact_count;

  Mask mask = enc.mask;
  if (cfg.copy_only) mask[static_cast<std::size_t>(enc.mean_slot())] = false;

  Var h = tape.constant(Matrix::Zero(cfg.hidden_dim, 1));
  Var word_prev = tape.constant(Matrix::Zero(cfg.embedding_dim, 1));
  Var copy_prev = tape.constant(Matrix::Zero(cfg.copy_positions, 1));

  DecodeResult out;
  for (int t = 0; t < max_len; ++t) {
    Mask step_mask = mask;
    Var alpha;
    int slot = -1;
    while (true) {
      if (std::none_of(step_mask.begin(), step_mask.end(), [](bool b) { return b; })) break;
      alpha = fact_attention(w, projected, h, step_mask);
      slot = select_fact(alpha.value());
      if (slot < n && enc.factual_counts[static_cast<std::size_t>(slot)] == 0) {
        // Nothing to copy from this fact; take it out of contention and re-attend.
        step_mask[static_cast<std::size_t>(slot)] = false;
        slot = -1;
        continue;
      }
      break;
    }
    if (slot < 0) break;

    DecodeStep step;
    step.slot = slot;
    step.mask = step_mask;
    step.alpha = Eigen::Map<const Vector>(alpha.value().data(), alpha.value().size());

    Var fact = column(enc.facts, slot);
    h = decoder_step(w, fact, word_prev, copy_prev, h);
    bool stop = false;
    if (slot == n) {
      Var context = matmul(enc.facts, transpose(alpha));
      Var probs = vocab_distribution(w, context, h);
      const int idx = select_fact(probs.value());
      step.source = idx == Vocabulary::kUnk ? AlignSource::Unknown : AlignSource::Vocab;
      step.token = model.vocab.word(idx);
      if (idx == Vocabulary::kEos) {
        stop = true;
      } else if (idx != Vocabulary::kUnk && idx != Vocabulary::kSos) {
        out.tokens.push_back(step.token);
      }
      const int ids[1] = {idx};
      word_prev = embedding(w.embedding, ids);
      copy_prev = tape.constant(Matrix::Zero(cfg.copy_positions, 1));
    } else {
      const int words = std::min(enc.factual_counts[static_cast<std::size_t>(slot)], cfg.copy_positions);
      Var probs = copy_distribution(w, fact, h, words);
      const int pos = select_fact(probs.value());
      step.source = AlignSource::Fact;
      step.position = pos;
      step.token = entity.facts[static_cast<std::size_t>(slot)].factual_words[static_cast<std::size_t>(pos)];
      out.tokens.push_back(step.token);
      word_prev = tape.constant(Matrix::Zero(cfg.embedding_dim, 1));
      Matrix onehot = Matrix::Zero(cfg.copy_positions, 1);
      onehot(pos, 0) = 1.0;
      copy_prev = tape.constant(std::move(onehot));
    }
    out.steps.push_back(std::move(step));
    if (stop) break;
  }
  return out;
}

std::vector<Tokens> decode_all(const Model& model, std::span<const Entity> entities, int max_len, int threads) {
  std::vector<Tokens> out(entities.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(entities.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < entities.size(); ++i) out[i] = greedy_decode(model, entities[i], max_len).tokens;
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) {
      pool.emplace_back([&, k] {
        try {
          for (std::size_t i = k; i < entities.size(); i += workers) {
            out[i] = greedy_decode(model, entities[i], max_len).tokens;
          }
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace factscribe
