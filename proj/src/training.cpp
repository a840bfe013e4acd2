// SPDX-License-Identifier: Apache-2.0
#include "factscribe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "factscribe/adam.hpp"
#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"
#include "factscribe/metrics.hpp"

namespace factscribe {
namespace {

bool routes_to_vocab(const AlignedToken& token) { return token.source != AlignSource::Fact; }

int vocab_target(const AlignedToken& token) {
  return token.source == AlignSource::Unknown ? Vocabulary::kUnk : token.vocab_index;
}

Var accumulate(Var acc, Var term) { return !acc.valid() ? term : add(acc, term); }

void clip_gradients(std::span<Tensor* const> params, double max_norm) {
  double sq = 0;
  for (const Tensor* t : params) sq += t->grad().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor* t : params) t->grad() *= factor;
  }
}

LossValue values_of(const LossTerms& terms) {
  LossValue v;
  v.total = terms.total.scalar();
  v.word = terms.word.scalar();
  v.fact = terms.fact.scalar();
  return v;
}

}  // namespace

TrainingExample prepare_example(const Entity& entity, const AlignedDescription& aligned, const Model& model) {
  if (aligned.entity_id != entity.id) {
    throw ContractError("alignment for '" + aligned.entity_id + "' paired with entity '" + entity.id + "'");
  }
  if (aligned.tokens.empty()) throw ContractError("alignment for '" + entity.id + "' is empty");
  const int n = static_cast<int>(entity.facts.size());
  for (const AlignedToken& token : aligned.tokens) {
    if (token.source == AlignSource::Fact) {
      if (token.fact < 0 || token.fact >= n) {
        throw ContractError("alignment for '" + entity.id + "' refers to fact " + std::to_string(token.fact) +
                            " of " + std::to_string(n));
      }
      const auto& words = entity.facts[static_cast<std::size_t>(token.fact)].factual_words;
      if (token.position < 0 || token.position >= static_cast<int>(words.size()) ||
          token.position >= model.config.copy_positions || words[static_cast<std::size_t>(token.position)] != token.surface) {
        throw ContractError("alignment for '" + entity.id + "': token '" + token.surface +
                            "' does not match fact " + std::to_string(token.fact) + " position " +
                            std::to_string(token.position));
      }
    } else if (token.source == AlignSource::Vocab) {
      if (token.vocab_index < 0 || token.vocab_index >= model.vocab.size()) {
        throw ContractError("alignment for '" + entity.id + "': vocabulary index " +
                            std::to_string(token.vocab_index) + " out of range");
      }
    }
  }
  TrainingExample ex;
  ex.entity = &entity;
  ex.input = prepare_encoder_input(entity, model.vocab, model.config.max_phrase_length);
  ex.target = aligned;
  return ex;
}

LossTerms step_loss(Tape& tape, const DecoderWeights& w, const Model& model, const TrainingExample& ex) {
  const ModelConfig& cfg = model.config;
  const EncodedEntity enc = encode_entity(w.embedding, ex.input, cfg.encoder(),
                                          cfg.mean_fact == MeanFactMode::FixedRandom ? &model.params.fixed_mean_fact
                                                                                     : nullptr);
  Var projected = project_facts(w, enc.facts);
  Mask mask = enc.mask;
  if (cfg.copy_only) mask[static_cast<std::size_t>(enc.mean_slot())] = false;

  Var h = tape.constant(Matrix::Zero(cfg.hidden_dim, 1));
  Var word_prev = tape.constant(Matrix::Zero(cfg.embedding_dim, 1));
  Var copy_prev = tape.constant(Matrix::Zero(cfg.copy_positions, 1));

  LossTerms terms;
  for (const AlignedToken& token : ex.target.tokens) {
    const bool vocab_path = routes_to_vocab(token);
    if (vocab_path && cfg.copy_only) continue;
    const int slot = vocab_path ? enc.mean_slot() : token.fact;

    Var alpha = fact_attention(w, projected, h, mask);
    terms.fact = accumulate(terms.fact, nll(alpha, slot));

    Var fact = column(enc.facts, slot);
    h = decoder_step(w, fact, word_prev, copy_prev, h);
    if (vocab_path) {
      Var context = matmul(enc.facts, transpose(alpha));
      const int target = vocab_target(token);
      terms.word = accumulate(terms.word, nll(vocab_distribution(w, context, h), target));
      const int ids[1] = {target};
      word_prev = embedding(w.embedding, ids);
      copy_prev = tape.constant(Matrix::Zero(cfg.copy_positions, 1));
    } else {
      const int words = enc.factual_counts[static_cast<std::size_t>(slot)];
      terms.word = accumulate(terms.word, nll(copy_distribution(w, fact, h, std::min(words, cfg.copy_positions)),
                                              token.position));
      word_prev = tape.constant(Matrix::Zero(cfg.embedding_dim, 1));
      Matrix onehot = Matrix::Zero(cfg.copy_positions, 1);
      onehot(token.position, 0) = 1.0;
      copy_prev = tape.constant(std::move(onehot));
    }
    ++terms.steps;
  }
  if (terms.steps == 0) {
    Var zero = tape.constant(Matrix::Zero(1, 1));
    terms.word = zero;
    terms.fact = zero;
  }
  terms.total = add(terms.word, terms.fact);
  return terms;
}

LossValue accumulate_gradients(Model& model, const TrainingExample& example, double seed) {
  Tape tape(true);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  LossTerms terms = step_loss(tape, w, model, example);
  const LossValue v = values_of(terms);
  if (!std::isfinite(v.total)) {
    throw NumericError("training diverged: non-finite loss on entity '" + example.entity->id + "'");
  }
  tape.backward(terms.total, seed);
  return v;
}

LossValue evaluate_loss(const Model& model, const TrainingExample& example) {
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  return values_of(step_loss(tape, w, model, example));
}

TrainResult train(std::span<const Entity> train_split, std::span<const Entity> dev, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_split.empty()) throw ConfigError("training split is empty");

  Model model;
  model.vocab = build_vocabulary(train_split, config.vocab_size, config.vocab_source);
  model.config = config.model(model.vocab.size());
  model.config.validate();
  model.params = ModelParams(model.config);
  model.params.initialize(config.seed);

  const AlignedCorpus aligned = align_corpus(train_split, model.vocab);
  std::vector<TrainingExample> examples;
  examples.reserve(aligned.descriptions.size());
  {
    std::size_t next = 0;
    for (const AlignedDescription& desc : aligned.descriptions) {
      while (next < train_split.size() && train_split[next].id != desc.entity_id) ++next;
      if (next == train_split.size()) throw ContractError("alignment order does not follow the training split");
      examples.push_back(prepare_example(train_split[next], desc, model));
      ++next;
    }
  }
  if (examples.empty()) throw ConfigError("training split has no descriptions");
  {
    std::ostringstream msg;
    msg << "training on " << examples.size() << " descriptions, vocabulary " << model.vocab.size() << ", "
        << count_parameters(model.config).total << " parameters, seed " << config.seed << "; alignment: "
        << aligned.stats.fact << " fact, " << aligned.stats.vocab << " vocab, " << aligned.stats.unk << " unk";
    log_info(msg.str());
  }

  std::vector<Entity> dev_entities;
  std::vector<Tokens> dev_refs;
  for (const Entity& e : dev) {
    if (!e.description_tokens) continue;
    dev_entities.push_back(e);
    dev_refs.push_back(*e.description_tokens);
  }

  std::vector<Tensor*> learnable = model.params.learnable();
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  AdamState adam(learnable, adam_cfg);
  std::mt19937_64 rng(config.seed + 1);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  bool have_best = false;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double seed = 1.0 / static_cast<double>(stop - start);
      model.params.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        loss_sum += accumulate_gradients(model, examples[order[k]], seed).total;
      }
      if (config.grad_clip > 0) clip_gradients(learnable, config.grad_clip);
      adam_step(learnable, adam);
    }

    EpochReport report;
    report.epoch = epoch;
    report.mean_loss = loss_sum / static_cast<double>(examples.size());
    if (!dev_entities.empty()) {
      const auto hyps = decode_all(model, dev_entities, config.max_decode_length, config.dev_threads);
      report.dev_bleu4 = bleu(hyps, dev_refs, 4);
      if (!have_best || report.dev_bleu4 > result.best_dev_bleu4) {
        report.best = true;
        result.best_dev_bleu4 = report.dev_bleu4;
      }
    } else {
      report.best = true;
    }
    if (report.best) {
      have_best = true;
      result.best_epoch = epoch;
      result.model = model;
    }
    result.history.push_back(report);
    if (on_epoch) on_epoch(report);
  }
  return result;
}

}  // namespace factscribe
