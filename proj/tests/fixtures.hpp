// Shared entities and hand-built models for the test binaries.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "factscribe/corpus.hpp"
#include "factscribe/model.hpp"

namespace fixtures {

using namespace factscribe;

inline Entity make_entity(const std::string& id, std::vector<std::pair<std::string, std::string>> facts,
                          const std::string& description = "") {
  Entity e;
  e.id = id;
  for (auto& [p, v] : facts) e.facts.push_back(make_fact(p, v, StopwordList::english()));
  if (!description.empty()) e.description_tokens = tokenize(description);
  return e;
}

/// The street entity used throughout: two facts in the short form, four in the full one.
inline Entity street_entity(bool full = false) {
  std::vector<std::pair<std::string, std::string>> facts{{"instance of", "street"}, {"location", "Elsloo"}};
  if (full) {
    facts.emplace_back("country", "Netherlands");
    facts.emplace_back("named after", "Michiel de Ruyter");
  }
  return make_entity("Q19345316", facts, "street in Elsloo");
}

inline Vocabulary vocab_of(const std::vector<std::string>& words) {
  std::vector<std::string> all{"<UNK>", "<SOS>", "<EOS>"};
  all.insert(all.end(), words.begin(), words.end());
  return Vocabulary::from_words(all);
}

inline ModelConfig tiny_config(int dim, int vocab_size, int copy_positions) {
  ModelConfig c;
  c.embedding_dim = c.hidden_dim = c.attention_dim = c.head_dim = dim;
  c.vocab_size = vocab_size;
  c.copy_positions = copy_positions;
  return c;
}

/// Random model of the given shape, initialized from `seed`.
inline Model random_model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed) {
  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  m.params = ModelParams(config);
  m.params.initialize(seed);
  return m;
}

/// d = H = 1 model over street_entity() whose attention picks "instance of:
/// street" at the first step (h = 0) and the mean fact at the second step,
/// where the vocabulary head emits <EOS>.
///
/// With d = 1 the positional weight of word j in a J-word phrase is j / J, so
/// embeddings street = 1, elsloo = -1 (everything else 0) give facts 1 and -1
/// and a mean fact of 0. The GRU has zero weights and candidate bias 1, so
/// h1 = tanh(1) / 2. Two tanh units with opposite offsets form a bump centred
/// on 1 - h / h1, which is fact 0 at h = 0 and the mean fact at h = h1.
inline Model routing_model() {
  ModelConfig c;
  c.embedding_dim = 1;
  c.hidden_dim = 1;
  c.attention_dim = 2;
  c.head_dim = 1;
  c.vocab_size = 6;
  c.copy_positions = 2;
  Model m;
  m.config = c;
  m.vocab = vocab_of({"street", "in", "elsloo"});
  m.params = ModelParams(c);
  auto& p = m.params;
  p.embedding.value()(*m.vocab.find("street"), 0) = 1.0;
  p.embedding.value()(*m.vocab.find("elsloo"), 0) = -1.0;

  const double h1 = 0.5 * std::tanh(1.0);
  const double s = 3.0, delta = 1.0, target0 = 1.0, slope = -1.0 / h1;
  p.attn_w1.value() << s, -s * slope, s, -s * slope;
  p.attn_b1.value() << -s * target0 + delta, -s * target0 - delta;
  p.attn_w2.value() << 1.0, -1.0;
  p.gru_b.value()(2, 0) = 1.0;
  p.vocab_ba.value()(Vocabulary::kEos, 0) = 5.0;
  return m;
}

}  // namespace fixtures
