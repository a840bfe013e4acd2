// SPDX-License-Identifier: Apache-2.0
//
// Greedy fact alignment of description tokens. Each token is attributed to
// the first fact whose factual words contain it, otherwise to the vocabulary
// (the mean-fact path), otherwise marked unknown and trained as <UNK>.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "factscribe/corpus.hpp"

namespace factscribe {

enum class AlignSource { Fact, Vocab, Unknown };

const char* align_source_name(AlignSource source) noexcept;

struct AlignedToken {
  std::string surface;
  AlignSource source = AlignSource::Vocab;
  int fact = -1;         // valid when source == Fact
  int position = -1;     // copy position in that fact's factual_words
  int vocab_index = -1;  // valid for Vocab; kUnk for Unknown
};

struct AlignedDescription {
  std::string entity_id;
  std::vector<AlignedToken> tokens;  // ends with <EOS> on the vocabulary path
};

struct AlignmentStats {
  long fact = 0;
  long vocab = 0;   // includes one <EOS> per description
  long unk = 0;
  long descriptions = 0;

  long total() const noexcept { return fact + vocab + unk; }
  /// Unknown tokens over non-<EOS> tokens; 0 for an empty corpus.
  double unk_fraction() const noexcept;
};

struct AlignedCorpus {
  std::vector<AlignedDescription> descriptions;
  AlignmentStats stats;
};

/// Requires entity.description_tokens; throws ContractError otherwise.
AlignedDescription align_description(const Entity& entity, const Vocabulary& vocab);

/// Entities without a description are skipped with a warning.
AlignedCorpus align_corpus(std::span<const Entity> entities, const Vocabulary& vocab);

/// {"id":..., "tokens":[{"w":..., "src":"fact|vocab|unk", "fact":i, "pos":p}, ...]}
std::string alignment_to_json(const AlignedDescription& aligned);

}  // namespace factscribe
