// SPDX-License-Identifier: Apache-2.0
#include "factscribe/alignment.hpp"

#include <algorithm>

#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"
#include "json.hpp"

namespace factscribe {

const char* align_source_name(AlignSource source) noexcept {
  switch (source) {
    case AlignSource::Fact: return "fact";
    case AlignSource::Vocab: return "vocab";
    case AlignSource::Unknown: return "unk";
  }
  return "?";
}

double AlignmentStats::unk_fraction() const noexcept {
  const long words = total() - descriptions;
  return words > 0 ? static_cast<double>(unk) / static_cast<double>(words) : 0.0;
}

AlignedDescription align_description(const Entity& entity, const Vocabulary& vocab) {
  if (!entity.description_tokens) {
    throw ContractError("align_description: entity " + entity.id + " has no description");
  }
  AlignedDescription out;
  out.entity_id = entity.id;
  out.tokens.reserve(entity.description_tokens->size() + 1);
  for (const std::string& w : *entity.description_tokens) {
    AlignedToken tok;
    tok.surface = w;
    bool factual = false;
    for (std::size_t i = 0; i < entity.facts.size() && !factual; ++i) {
      const Tokens& words = entity.facts[i].factual_words;
      auto it = std::find(words.begin(), words.end(), w);
      if (it != words.end()) {
        tok.source = AlignSource::Fact;
        tok.fact = static_cast<int>(i);
        tok.position = static_cast<int>(it - words.begin());
        factual = true;
      }
    }
    if (!factual) {
      if (auto idx = vocab.find(w)) {
        tok.source = AlignSource::Vocab;
        tok.vocab_index = *idx;
      } else {
        tok.source = AlignSource::Unknown;
        tok.vocab_index = Vocabulary::kUnk;
      }
    }
    out.tokens.push_back(std::move(tok));
  }
  AlignedToken eos;
  eos.surface = std::string(Vocabulary::kEosToken);
  eos.source = AlignSource::Vocab;
  eos.vocab_index = Vocabulary::kEos;
  out.tokens.push_back(std::move(eos));
  return out;
}

AlignedCorpus align_corpus(std::span<const Entity> entities, const Vocabulary& vocab) {
  AlignedCorpus out;
  for (const Entity& e : entities) {
    if (!e.description_tokens) {
      log_warning("alignment: skipping entity " + e.id + " without description");
      continue;
    }
    AlignedDescription d = align_description(e, vocab);
    for (const auto& t : d.tokens) {
      switch (t.source) {
        case AlignSource::Fact: ++out.stats.fact; break;
        case AlignSource::Vocab: ++out.stats.vocab; break;
        case AlignSource::Unknown: ++out.stats.unk; break;
      }
    }
    ++out.stats.descriptions;
    out.descriptions.push_back(std::move(d));
  }
  return out;
}

std::string alignment_to_json(const AlignedDescription& aligned) {
  nlohmann::ordered_json j;
  j["id"] = aligned.entity_id;
  j["tokens"] = nlohmann::ordered_json::array();
  for (const auto& t : aligned.tokens) {
    nlohmann::ordered_json jt;
    jt["w"] = t.surface;
    jt["src"] = align_source_name(t.source);
    if (t.source == AlignSource::Fact) {
      jt["fact"] = t.fact;
      jt["pos"] = t.position;
    }
    j["tokens"].push_back(std::move(jt));
  }
  return j.dump();
}

}  // namespace factscribe
