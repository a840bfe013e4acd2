// SPDX-License-Identifier: Apache-2.0
#include "factscribe/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>

#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"
#include "json.hpp"

namespace factscribe {
namespace {

// UTF-8 helpers. Malformed bytes pass through unchanged as single units.
struct CodePoint {
  char32_t value;
  bool valid;
  std::string_view raw;
};

std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back({0xFFFD, false, s.substr(i, 1)});
      ++i;
      continue;
    }
    out.push_back({cp, true, s.substr(i, len)});
    i += len;
  }
  return out;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return U'i';
    if (c == 0x178) return 0xFF;
    const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    const bool even_upper = (c <= 0x137 && c != 0x131) || (c >= 0x14A && c <= 0x177);
    if (odd_upper && (c % 2 == 1)) return c + 1;
    if (even_upper && (c % 2 == 0)) return c + 1;
    return c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x460 && c <= 0x4FF && c % 2 == 0 && !(c >= 0x482 && c <= 0x489)) return c + 1;
  if (c >= 0x1E00 && c <= 0x1EFF && c % 2 == 0 && !(c >= 0x1E96 && c <= 0x1E9F)) return c + 1;
  return c;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0xA0 ||
         c == 0x2000 || (c > 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  return c == 0xA1 || c == 0xAB || c == 0xB7 || c == 0xBB || c == 0xBF || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011);
}

std::string finish_token(const std::vector<CodePoint>& cps, std::size_t begin, std::size_t end) {
  while (begin < end && cps[begin].valid && is_punct(cps[begin].value)) ++begin;
  while (end > begin && cps[end - 1].valid && is_punct(cps[end - 1].value)) --end;
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (cps[i].valid) {
      encode_utf8(to_lower(cps[i].value), out);
    } else {
      out.append(cps[i].raw);
    }
  }
  return out;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  const std::vector<CodePoint> cps = decode_utf8(text);
  Tokens tokens;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= cps.size(); ++i) {
    if (i == cps.size() || (cps[i].valid && is_space(cps[i].value))) {
      if (i > start) {
        std::string tok = finish_token(cps, start, i);
        if (!tok.empty()) tokens.push_back(std::move(tok));
      }
      start = i + 1;
    }
  }
  return tokens;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

StopwordList::StopwordList(std::vector<std::string> words) {
  for (auto& w : words) words_.insert(std::move(w));
}

const StopwordList& StopwordList::english() {
  static const StopwordList list({"a",    "an",   "the",  "and",  "or",   "of",  "in",   "on",
                                  "at",   "by",   "for",  "to",   "from", "with", "as",  "into",
                                  "onto", "over", "under", "is",  "was",  "are", "were", "be",
                                  "been", "it",   "its",  "that", "this", "than"});
  return list;
}

bool StopwordList::contains(std::string_view word) const { return words_.count(std::string(word)) > 0; }

Tokens factual_words(const Tokens& value_tokens, const StopwordList& stopwords, int max_words) {
  Tokens out;
  for (const auto& tok : value_tokens) {
    if (static_cast<int>(out.size()) >= max_words) break;
    if (!stopwords.contains(tok)) out.push_back(tok);
  }
  return out;
}

Fact make_fact(std::string_view property, std::string_view value, const StopwordList& stopwords,
               const CorpusLimits& limits) {
  Fact f;
  f.property = std::string(property);
  f.value = std::string(value);
  f.property_tokens = tokenize(property);
  f.value_tokens = tokenize(value);
  f.factual_words = factual_words(f.value_tokens, stopwords, limits.max_factual_words);
  return f;
}

std::optional<Entity> parse_entity(std::string_view line, const CorpusLimits& limits, const std::string& source,
                                   std::size_t line_number, const StopwordList& stopwords) {
  using nlohmann::json;
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw ParseError(source, line_number, "record is not a JSON object");
  auto id_it = rec.find("id");
  if (id_it == rec.end() || !id_it->is_string()) {
    throw ParseError(source, line_number, "missing string field 'id'");
  }
  Entity e;
  e.id = id_it->get<std::string>();

  auto facts_it = rec.find("facts");
  if (facts_it == rec.end() || !facts_it->is_array()) {
    throw ParseError(source, line_number, "missing array field 'facts'");
  }
  for (const auto& jf : *facts_it) {
    if (!jf.is_object() || !jf.contains("property") || !jf.contains("value") || !jf["property"].is_string() ||
        !jf["value"].is_string()) {
      throw ParseError(source, line_number, "fact must be {\"property\": string, \"value\": string}");
    }
    if (static_cast<int>(e.facts.size()) >= limits.max_facts) break;
    Fact f = make_fact(jf["property"].get<std::string>(), jf["value"].get<std::string>(), stopwords, limits);
    if (f.property_tokens.empty()) {
      log_warning(source + ":" + std::to_string(line_number) + ": entity " + e.id +
                  ": dropping fact with empty property name");
      continue;
    }
    e.facts.push_back(std::move(f));
  }

  if (auto d = rec.find("description"); d != rec.end() && !d->is_null()) {
    if (!d->is_string()) throw ParseError(source, line_number, "'description' must be a string");
    e.description_tokens = tokenize(d->get<std::string>());
  }

  if (e.facts.empty()) {
    log_warning(source + ":" + std::to_string(line_number) + ": skipping entity " + e.id + " with no facts");
    return std::nullopt;
  }
  return e;
}

std::vector<Entity> load_entities(const std::filesystem::path& path, const CorpusLimits& limits,
                                  const StopwordList& stopwords) {
  if (limits.max_facts < 1 || limits.max_factual_words < 1) {
    throw ConfigError("max_facts and max_factual_words must be positive");
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Entity> out;
  std::string line;
  std::size_t number = 0;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto e = parse_entity(line, limits, path.string(), number, stopwords);
    if (e) {
      out.push_back(std::move(*e));
    } else {
      ++skipped;
    }
  }
  log_info("loaded " + std::to_string(out.size()) + " entities from " + path.string() +
           (skipped ? " (" + std::to_string(skipped) + " skipped)" : ""));
  return out;
}

Datasets load_dataset(const std::filesystem::path& train, const std::filesystem::path& dev,
                      const std::filesystem::path& test, const CorpusLimits& limits) {
  Datasets d;
  if (!train.empty()) d.train = load_entities(train, limits);
  if (!dev.empty()) d.dev = load_entities(dev, limits);
  if (!test.empty()) d.test = load_entities(test, limits);
  log_info("splits: train=" + std::to_string(d.train.size()) + " dev=" + std::to_string(d.dev.size()) +
           " test=" + std::to_string(d.test.size()));
  return d;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kUnkToken), std::string(kSosToken), std::string(kEosToken)},
                 0) {}

Vocabulary::Vocabulary(std::vector<std::string> words, int) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second) {
      throw DataError("vocabulary repeats word '" + words_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  if (words.size() < static_cast<std::size_t>(kSpecialCount) || words[kUnk] != kUnkToken ||
      words[kSos] != kSosToken || words[kEos] != kEosToken) {
    throw DataError("vocabulary must start with <UNK>, <SOS>, <EOS>");
  }
  return Vocabulary(std::move(words), 0);
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || index >= size()) throw ContractError("vocabulary index " + std::to_string(index) + " out of range");
  return words_[static_cast<std::size_t>(index)];
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::index_or_unk(std::string_view word) const { return find(word).value_or(kUnk); }

Vocabulary build_vocabulary(std::span<const Entity> train, int size, VocabSource source) {
  if (size <= 0) throw ConfigError("vocabulary size must be positive, got " + std::to_string(size));
  std::map<std::string, long> counts;
  bool any_description = false;
  for (const Entity& e : train) {
    if (e.description_tokens) {
      any_description = true;
      for (const auto& t : *e.description_tokens) ++counts[t];
    }
    if (source == VocabSource::DescriptionsAndProperties) {
      for (const Fact& f : e.facts) {
        for (const auto& t : f.property_tokens) ++counts[t];
      }
    }
  }
  if (!any_description) throw ConfigError("vocabulary needs at least one training description");

  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  // counts is already lexicographic; a stable sort on frequency keeps that order for ties.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> words{std::string(Vocabulary::kUnkToken), std::string(Vocabulary::kSosToken),
                                 std::string(Vocabulary::kEosToken)};
  for (const auto& [w, c] : ranked) {
    if (static_cast<int>(words.size()) - Vocabulary::kSpecialCount >= size) break;
    if (w == Vocabulary::kUnkToken || w == Vocabulary::kSosToken || w == Vocabulary::kEosToken) continue;
    words.push_back(w);
  }
  return Vocabulary::from_words(std::move(words));
}

}  // namespace factscribe
