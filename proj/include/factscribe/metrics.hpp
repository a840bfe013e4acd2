// SPDX-License-Identifier: Apache-2.0
//
// Corpus-level description metrics against one reference per candidate.
// BLEU, ROUGE-L and METEOR-exact are reported on a 0-100 scale, CIDEr on 0-10.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "factscribe/corpus.hpp"

namespace factscribe {

/// Corpus BLEU over orders 1..n with brevity penalty. A zero clipped count at
/// any order is replaced by 1 / (2 * candidate n-gram count) of that order.
double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int n);

/// LCS F-measure with beta = 1.2, averaged over pairs.
double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references);

/// Exact-match METEOR: Fmean = 10PR / (R + 9P), fragmentation penalty
/// 0.5 * (chunks / matches)^3, averaged over pairs.
double meteor_exact(std::span<const Tokens> candidates, std::span<const Tokens> references);

/// CIDEr over n = 1..4 with document frequencies from the references,
/// scaled by 10. A single-pair corpus has all-zero IDF and scores 0.
double cider(std::span<const Tokens> candidates, std::span<const Tokens> references);

struct MetricReport {
  double bleu[4] = {0, 0, 0, 0};
  double rouge_l = 0;
  double meteor_exact = 0;
  double cider = 0;
  std::size_t pairs = 0;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

MetricReport evaluate(std::span<const Tokens> candidates, std::span<const Tokens> references);

/// A {"id", "text"} record, tokenized.
struct TextRecord {
  std::string id;
  Tokens tokens;
};

std::vector<TextRecord> load_text_records(const std::filesystem::path& path);

/// Pairs candidates with references by id. Throws DataError listing the ids
/// missing on either side, or on duplicate ids.
MetricReport evaluate_corpus(std::span<const TextRecord> candidates, std::span<const TextRecord> references);

}  // namespace factscribe
