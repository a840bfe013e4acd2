// SPDX-License-Identifier: Apache-2.0
#include "factscribe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"

namespace factscribe {
namespace {

using NgramCounts = std::map<Tokens, int>;

NgramCounts ngrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i) + n)];
  }
  return counts;
}

void check_pairs(std::span<const Tokens> candidates, std::span<const Tokens> references, const char* metric) {
  if (candidates.size() != references.size()) {
    throw ContractError(std::string(metric) + ": " + std::to_string(candidates.size()) + " candidates for " +
                        std::to_string(references.size()) + " references");
  }
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct Alignment {
  int matches = 0;
  int chunks = 0;
};

// Greedy exact alignment: each candidate word takes the reference occurrence
// that extends the current chunk when possible, otherwise the earliest unused one.
Alignment align_exact(const Tokens& cand, const Tokens& ref) {
  std::vector<bool> used(ref.size(), false);
  Alignment a;
  long last_ref = -2;
  bool in_chunk = false;
  for (const std::string& word : cand) {
    long pick = -1;
    const long next = last_ref + 1;
    if (in_chunk && next >= 0 && next < static_cast<long>(ref.size()) && !used[static_cast<std::size_t>(next)] &&
        ref[static_cast<std::size_t>(next)] == word) {
      pick = next;
    } else {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && ref[j] == word) {
          pick = static_cast<long>(j);
          break;
        }
      }
    }
    if (pick < 0) {
      in_chunk = false;
      continue;
    }
    used[static_cast<std::size_t>(pick)] = true;
    if (!in_chunk || pick != last_ref + 1) ++a.chunks;
    ++a.matches;
    last_ref = pick;
    in_chunk = true;
  }
  return a;
}

using Vec = std::map<Tokens, double>;

double norm(const Vec& v) {
  double s = 0;
  for (const auto& [k, x] : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int n) {
  check_pairs(candidates, references, "bleu");
  if (n < 1 || n > 4) throw ContractError("bleu: order must be in 1..4, got " + std::to_string(n));
  if (candidates.empty()) throw ContractError("bleu: empty candidate set");
  std::vector<long> matched(static_cast<std::size_t>(n), 0), total(static_cast<std::size_t>(n), 0);
  std::vector<long> ref_total(static_cast<std::size_t>(n), 0);
  long c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += static_cast<long>(candidates[i].size());
    r += static_cast<long>(references[i].size());
    for (int k = 1; k <= n; ++k) {
      const NgramCounts cand = ngrams(candidates[i], k);
      const NgramCounts ref = ngrams(references[i], k);
      for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        matched[static_cast<std::size_t>(k - 1)] += std::min(count, it == ref.end() ? 0 : it->second);
        total[static_cast<std::size_t>(k - 1)] += count;
      }
      for (const auto& [gram, count] : ref) ref_total[static_cast<std::size_t>(k - 1)] += count;
    }
  }
  if (c == 0) return 0.0;
  double log_sum = 0;
  for (int k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    double p;
    if (total[uk] == 0) {
      // No candidate n-grams of this order: perfect only if the references have none either.
      if (ref_total[uk] != 0) return 0.0;
      p = 1.0;
    } else if (matched[uk] == 0) {
      p = 1.0 / (2.0 * static_cast<double>(total[uk]));
    } else {
      p = static_cast<double>(matched[uk]) / static_cast<double>(total[uk]);
    }
    log_sum += std::log(p);
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return 100.0 * bp * std::exp(log_sum / n);
}

double rouge_l(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_pairs(candidates, references, "rouge_l");
  if (candidates.empty()) return 0.0;
  constexpr double beta2 = 1.2 * 1.2;
  double sum = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto lcs = static_cast<double>(lcs_length(candidates[i], references[i]));
    if (lcs == 0) continue;
    const double p = lcs / static_cast<double>(candidates[i].size());
    const double rc = lcs / static_cast<double>(references[i].size());
    sum += (1 + beta2) * p * rc / (rc + beta2 * p);
  }
  return 100.0 * sum / static_cast<double>(candidates.size());
}

double meteor_exact(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_pairs(candidates, references, "meteor_exact");
  if (candidates.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Alignment a = align_exact(candidates[i], references[i]);
    if (a.matches == 0) continue;
    const double p = a.matches / static_cast<double>(candidates[i].size());
    const double r = a.matches / static_cast<double>(references[i].size());
    const double fmean = 10 * p * r / (r + 9 * p);
    const double frag = static_cast<double>(a.chunks) / a.matches;
    sum += fmean * (1 - 0.5 * frag * frag * frag);
  }
  return 100.0 * sum / static_cast<double>(candidates.size());
}

double cider(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_pairs(candidates, references, "cider");
  if (candidates.empty()) return 0.0;
  if (candidates.size() == 1) {
    log_warning("cider: single-pair corpus, document frequencies are degenerate and every IDF is 0");
  }
  constexpr int kMaxN = 4;
  const auto docs = static_cast<double>(references.size());
  double total = 0;
  std::vector<std::vector<NgramCounts>> ref_grams(kMaxN), cand_grams(kMaxN);
  std::vector<std::map<Tokens, int>> df(kMaxN);
  for (int n = 1; n <= kMaxN; ++n) {
    for (std::size_t i = 0; i < references.size(); ++i) {
      ref_grams[n - 1].push_back(ngrams(references[i], n));
      cand_grams[n - 1].push_back(ngrams(candidates[i], n));
      for (const auto& [gram, count] : ref_grams[n - 1].back()) ++df[n - 1][gram];
    }
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double pair_score = 0;
    for (int n = 0; n < kMaxN; ++n) {
      auto tfidf = [&](const NgramCounts& counts) {
        Vec v;
        int sum = 0;
        for (const auto& [g, c] : counts) sum += c;
        for (const auto& [g, c] : counts) {
          auto it = df[n].find(g);
          const double d = it == df[n].end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
          v[g] = (static_cast<double>(c) / sum) * (std::log(docs) - std::log(d));
        }
        return v;
      };
      const Vec vc = tfidf(cand_grams[n][i]);
      const Vec vr = tfidf(ref_grams[n][i]);
      const double nc = norm(vc), nr = norm(vr);
      if (nc == 0 || nr == 0) continue;
      double dot = 0;
      for (const auto& [g, x] : vc) {
        auto it = vr.find(g);
        if (it != vr.end()) dot += x * it->second;
      }
      pair_score += dot / (nc * nr);
    }
    total += pair_score / kMaxN;
  }
  return 10.0 * total / static_cast<double>(candidates.size());
}

MetricReport evaluate(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  MetricReport r;
  r.pairs = candidates.size();
  for (int n = 1; n <= 4; ++n) r.bleu[n - 1] = bleu(candidates, references, n);
  r.rouge_l = rouge_l(candidates, references);
  r.meteor_exact = meteor_exact(candidates, references);
  r.cider = cider(candidates, references);
  return r;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["pairs"] = pairs;
  j["bleu1"] = bleu[0];
  j["bleu2"] = bleu[1];
  j["bleu3"] = bleu[2];
  j["bleu4"] = bleu[3];
  j["rouge_l"] = rouge_l;
  j["meteor_exact"] = meteor_exact;
  j["cider"] = cider;
  return j;
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  const char* names[] = {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L", "METEOR-exact", "CIDEr"};
  const double values[] = {bleu[0], bleu[1], bleu[2], bleu[3], rouge_l, meteor_exact, cider};
  for (int i = 0; i < 7; ++i) {
    out << std::left << std::setw(14) << names[i] << std::right << std::setw(8) << std::fixed
        << std::setprecision(2) << values[i] << '\n';
  }
  out << std::left << std::setw(14) << "pairs" << std::right << std::setw(8) << pairs << '\n';
  return out.str();
}

std::vector<TextRecord> load_text_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TextRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw ParseError(path.string(), line_no, "expected {\"id\": string, \"text\": string}");
    }
    out.push_back({j["id"].get<std::string>(), tokenize(j["text"].get<std::string>())});
  }
  return out;
}

MetricReport evaluate_corpus(std::span<const TextRecord> candidates, std::span<const TextRecord> references) {
  std::unordered_map<std::string, const TextRecord*> by_id;
  for (const TextRecord& r : references) {
    if (!by_id.emplace(r.id, &r).second) throw DataError("duplicate reference id '" + r.id + "'");
  }
  std::set<std::string> seen;
  std::vector<std::string> missing_refs;
  for (const TextRecord& c : candidates) {
    if (!seen.insert(c.id).second) throw DataError("duplicate candidate id '" + c.id + "'");
    if (!by_id.count(c.id)) missing_refs.push_back(c.id);
  }
  std::vector<std::string> missing_cands;
  for (const TextRecord& r : references) {
    if (!seen.count(r.id)) missing_cands.push_back(r.id);
  }
  if (!missing_refs.empty() || !missing_cands.empty()) {
    std::ostringstream msg;
    msg << "candidate and reference ids differ;";
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg << ' ' << what << ':';
      for (const auto& id : ids) msg << ' ' << id;
      msg << ';';
    };
    list("missing references for", missing_refs);
    list("missing candidates for", missing_cands);
    throw DataError(msg.str());
  }
  if (candidates.empty()) throw DataError("no candidate/reference pairs to evaluate");
  std::vector<Tokens> cands, refs;
  for (const TextRecord& c : candidates) {
    cands.push_back(c.tokens);
    refs.push_back(by_id.at(c.id)->tokens);
  }
  return evaluate(cands, refs);
}

}  // namespace factscribe
