// SPDX-License-Identifier: Apache-2.0
//
// Entity records, tokenization and the closed output vocabulary.
//
// Input corpora are UTF-8 JSONL, one entity per line:
//   {"id": "...", "facts": [{"property": "...", "value": "..."}, ...],
//    "description": "..."}            // description optional at inference
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace factscribe {

using Tokens = std::vector<std::string>;

/// Lowercases (Latin, Greek and Cyrillic case pairs), splits on whitespace
/// and strips punctuation from both ends of every token. Internal hyphens and
/// apostrophes survive; tokens left empty are dropped.
Tokens tokenize(std::string_view text);

std::string join(const Tokens& tokens, std::string_view sep = " ");

class StopwordList {
 public:
  explicit StopwordList(std::vector<std::string> words);

  /// The 30 English function words shipped with the library.
  static const StopwordList& english();

  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct CorpusLimits {
  int max_facts = 60;
  int max_factual_words = 60;
};

struct Fact {
  std::string property;  // raw text, used for labels
  std::string value;
  Tokens property_tokens;
  Tokens value_tokens;
  /// value_tokens without stopwords, order and duplicates preserved, capped.
  Tokens factual_words;

  std::string label() const { return property + ": " + value; }
};

struct Entity {
  std::string id;
  std::vector<Fact> facts;
  std::optional<Tokens> description_tokens;
};

/// Order-preserving stopword filter over a fact value, truncated to max_words.
Tokens factual_words(const Tokens& value_tokens, const StopwordList& stopwords, int max_words = 60);

/// Tokenizes both sides of a property-value pair and derives its factual words.
Fact make_fact(std::string_view property, std::string_view value, const StopwordList& stopwords,
               const CorpusLimits& limits = {});

/// Parses one JSONL record. Returns nullopt (after a warning) for entities
/// that end up with no facts. Throws ParseError on malformed input.
std::optional<Entity> parse_entity(std::string_view line, const CorpusLimits& limits,
                                   const std::string& source = "<input>", std::size_t line_number = 0,
                                   const StopwordList& stopwords = StopwordList::english());

std::vector<Entity> load_entities(const std::filesystem::path& path, const CorpusLimits& limits = {},
                                  const StopwordList& stopwords = StopwordList::english());

struct Datasets {
  std::vector<Entity> train;
  std::vector<Entity> dev;
  std::vector<Entity> test;
};

/// Loads prepared splits. An empty path yields an empty split.
Datasets load_dataset(const std::filesystem::path& train, const std::filesystem::path& dev,
                      const std::filesystem::path& test, const CorpusLimits& limits = {});

enum class VocabSource { Descriptions, DescriptionsAndProperties };

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSpecialCount = 3;
  static constexpr std::string_view kUnkToken = "<UNK>";
  static constexpr std::string_view kSosToken = "<SOS>";
  static constexpr std::string_view kEosToken = "<EOS>";

  /// Specials only.
  Vocabulary();

  /// Full ordered word list; the three specials must lead and no word may repeat.
  static Vocabulary from_words(std::vector<std::string> words);

  int size() const noexcept { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(int index) const;
  std::optional<int> find(std::string_view word) const;
  int index_or_unk(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  Vocabulary(std::vector<std::string> words, int);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Specials followed by the `size` most frequent training tokens; ties broken
/// lexicographically.
Vocabulary build_vocabulary(std::span<const Entity> train, int size,
                            VocabSource source = VocabSource::Descriptions);

}  // namespace factscribe
