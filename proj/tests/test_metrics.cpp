#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "factscribe/errors.hpp"
#include "factscribe/log.hpp"
#include "factscribe/metrics.hpp"

using namespace factscribe;

namespace {

using Corpus = std::vector<Tokens>;

struct CaptureWarnings {
  std::vector<std::string> warnings;
  LogSink prev;
  CaptureWarnings() {
    prev = set_log_sink([this](LogLevel l, const std::string& m) {
      if (l == LogLevel::Warning) warnings.push_back(m);
    });
  }
  ~CaptureWarnings() { set_log_sink(prev); }
};

Corpus random_corpus(std::mt19937_64& rng, std::size_t pairs, bool allow_empty) {
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "in", "of"};
  Corpus out;
  for (std::size_t i = 0; i < pairs; ++i) {
    Tokens t;
    const std::size_t len = (allow_empty ? 0 : 1) + rng() % 7;
    for (std::size_t k = 0; k < len; ++k) t.push_back(words[rng() % words.size()]);
    out.push_back(t);
  }
  return out;
}

bool matches_every_order(const Tokens& c, const Tokens& r) {
  for (std::size_t n = 1; n <= 4; ++n) {
    std::set<Tokens> grams;
    for (std::size_t j = 0; j + n <= r.size(); ++j) grams.insert(Tokens(r.begin() + long(j), r.begin() + long(j + n)));
    bool any = false;
    for (std::size_t j = 0; j + n <= c.size(); ++j) any = any || grams.count(Tokens(c.begin() + long(j), c.begin() + long(j + n)));
    if (!any) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("BLEU fixtures") {
  const Corpus same{{"the", "cat", "sat"}, {"a", "b", "c", "d", "e"}};
  for (int n = 1; n <= 4; ++n) CHECK(bleu(same, same, n) == doctest::Approx(100.0).epsilon(1e-14));

  const Corpus cand{{"the", "cat", "sat"}};
  const Corpus ref{{"the", "cat", "sat", "on", "mat"}};
  CHECK(bleu(cand, ref, 1) == doctest::Approx(51.3417).epsilon(1e-4));

  const double disjoint = bleu(Corpus{{"x", "y"}}, Corpus{{"a", "b"}}, 1);
  CHECK(disjoint > 0.0);
  CHECK(disjoint < 1.0 * 100);
  CHECK(disjoint == doctest::Approx(25.0));  // smoothed precision 1/(2*2), no brevity penalty
  CHECK(bleu(Corpus{{}}, Corpus{{"a"}}, 1) == 0.0);

  CHECK_THROWS_AS(bleu(Corpus{}, Corpus{}, 1), ContractError);
  CHECK_THROWS_AS(bleu(same, same, 5), ContractError);
  CHECK_THROWS_AS(bleu(same, Corpus{{"a"}}, 1), ContractError);
}

TEST_CASE("BLEU-n is non-increasing in n when candidates have distinct words and every order matches") {
  std::mt19937_64 rng(77);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g"};
  int tested = 0;
  while (tested < 500) {
    Corpus cands, refs;
    bool ok = true;
    const std::size_t pairs = 1 + rng() % 4;
    for (std::size_t i = 0; i < pairs && ok; ++i) {
      auto words = vocab;
      std::shuffle(words.begin(), words.end(), rng);
      const std::size_t len = 4 + rng() % 4;
      Tokens c(words.begin(), words.begin() + long(len));
      Tokens r;
      for (std::size_t k = 0, n = 2 + rng() % 6; k < n; ++k) r.push_back(vocab[rng() % vocab.size()]);
      const std::size_t start = rng() % (len - 3);
      r.insert(r.begin() + long(rng() % r.size()), c.begin() + long(start), c.begin() + long(start + 4));
      ok = matches_every_order(c, r);
      cands.push_back(c);
      refs.push_back(r);
    }
    if (!ok) continue;
    ++tested;
    for (int n = 1; n < 4; ++n) CHECK(bleu(cands, refs, n + 1) <= bleu(cands, refs, n) + 1e-9);
  }
}

TEST_CASE("BLEU-n can increase with n in general") {
  // Corpus-level counts: the one-word pair adds unigram mass but no bigrams.
  const Corpus c{{"z"}, {"a", "b"}}, r{{"a"}, {"a", "b"}};
  CHECK(bleu(c, r, 2) > bleu(c, r, 1));
  // Clipping alone can do it on a single pair.
  const Corpus c2{{"b", "a", "c", "c", "b"}}, r2{{"c", "b", "a", "c", "c"}};
  CHECK(bleu(c2, r2, 2) > bleu(c2, r2, 1));
}

TEST_CASE("ROUGE-L fixtures") {
  const Corpus same{{"a", "b"}, {"c"}};
  CHECK(rouge_l(same, same) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(rouge_l(Corpus{{"the", "cat"}}, Corpus{{"the", "dog"}}) == doctest::Approx(50.0));
  CHECK(rouge_l(Corpus{{}}, Corpus{{"a"}}) == 0.0);
  // Recall-weighted: the longer candidate with the same LCS is preferred.
  const double short_c = rouge_l(Corpus{{"a"}}, Corpus{{"a", "b", "c"}});
  const double long_c = rouge_l(Corpus{{"a", "b", "x", "y", "z", "w"}}, Corpus{{"a", "b", "c"}});
  CHECK(short_c > 0);
  CHECK(long_c > 0);
}

TEST_CASE("METEOR-exact fixtures") {
  CHECK(meteor_exact(Corpus{{"a", "b", "c"}}, Corpus{{"a", "b", "c"}}) ==
        doctest::Approx(100.0 * (1 - 0.5 / 27)).epsilon(1e-12));
  CHECK(meteor_exact(Corpus{{"x"}}, Corpus{{"a"}}) == 0.0);
  CHECK(meteor_exact(Corpus{{"b", "a"}}, Corpus{{"a", "b"}}) == doctest::Approx(50.0));
  // Repeated words keep a chunk contiguous when they can.
  CHECK(meteor_exact(Corpus{{"a", "a", "b"}}, Corpus{{"a", "a", "b"}}) ==
        doctest::Approx(100.0 * (1 - 0.5 / 27)).epsilon(1e-12));
}

TEST_CASE("CIDEr fixtures") {
  CaptureWarnings capture;
  const Corpus c{{"a", "b", "c", "d"}, {"e", "f", "g", "h"}};
  CHECK(cider(c, c) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(capture.warnings.empty());
  CHECK(cider(Corpus{{"x", "y"}, {"e", "f", "g", "h"}}, Corpus{{"a", "b"}, {"q", "r", "s", "t"}}) == 0.0);
  CHECK(cider(Corpus{{"a", "b"}}, Corpus{{"a", "b"}}) == 0.0);
  CHECK(capture.warnings.size() == 1);
}

TEST_CASE("metric ranges and order invariance on random corpora") {
  CaptureWarnings quiet;
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t pairs = 1 + rng() % 6;
    const Corpus refs = random_corpus(rng, pairs, false);
    Corpus cands = random_corpus(rng, pairs, true);
    if (trial % 5 == 0) cands = refs;
    const MetricReport r = evaluate(cands, refs);
    for (double b : r.bleu) {
      CHECK(b >= 0.0);
      CHECK(b <= 100.0 + 1e-9);
    }
    CHECK(r.rouge_l >= 0.0);
    CHECK(r.rouge_l <= 100.0 + 1e-9);
    CHECK(r.meteor_exact >= 0.0);
    CHECK(r.meteor_exact <= 100.0);
    CHECK(r.cider >= 0.0);
    CHECK(r.cider <= 10.0 + 1e-9);
    if (cands == refs) {
      for (double b : r.bleu) CHECK(b == doctest::Approx(100.0).epsilon(1e-12));
      CHECK(r.rouge_l == doctest::Approx(100.0).epsilon(1e-12));
    }

    std::vector<std::size_t> perm(pairs);
    for (std::size_t i = 0; i < pairs; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Corpus pc, pr;
    for (std::size_t i : perm) pc.push_back(cands[i]), pr.push_back(refs[i]);
    const MetricReport s = evaluate(pc, pr);
    for (int n = 0; n < 4; ++n) CHECK(s.bleu[n] == doctest::Approx(r.bleu[n]).epsilon(1e-12));
    CHECK(s.rouge_l == doctest::Approx(r.rouge_l).epsilon(1e-12));
    CHECK(s.meteor_exact == doctest::Approx(r.meteor_exact).epsilon(1e-12));
    CHECK(s.cider == doctest::Approx(r.cider).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_corpus pairs by id") {
  std::vector<TextRecord> refs{{"q1", {"a", "b", "c", "d"}}, {"q2", {"e", "f", "g", "h"}}};
  std::vector<TextRecord> cands{{"q2", {"e", "f", "g", "h"}}, {"q1", {"a", "b", "c", "d"}}};
  const MetricReport r = evaluate_corpus(cands, refs);
  for (double b : r.bleu) CHECK(b == doctest::Approx(100.0));
  CHECK(r.rouge_l == doctest::Approx(100.0));
  CHECK(r.meteor_exact == doctest::Approx(100.0 * (1 - 0.5 / 64)));
  CHECK(r.cider == doctest::Approx(10.0));
  CHECK(r.pairs == 2);

  const auto json = r.to_json();
  CHECK(json.contains("meteor_exact"));
  CHECK(r.to_table().find("METEOR-exact") != std::string::npos);

  std::vector<TextRecord> wrong{{"q1", {"a"}}, {"q9", {"b"}}};
  try {
    evaluate_corpus(wrong, refs);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("q9") != std::string::npos);
    CHECK(msg.find("q2") != std::string::npos);
  }
  std::vector<TextRecord> disjoint{{"z", {"a"}}};
  CHECK_THROWS_AS(evaluate_corpus(disjoint, refs), DataError);
  std::vector<TextRecord> dup{{"q1", {"a"}}, {"q1", {"a"}}};
  CHECK_THROWS_AS(evaluate_corpus(dup, refs), DataError);
}
