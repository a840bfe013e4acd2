#include <doctest.h>

#include <cmath>
#include <random>

#include "factscribe/decoder.hpp"
#include "factscribe/errors.hpp"
#include "factscribe/grad_check.hpp"
#include "fixtures.hpp"

using namespace factscribe;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("select_fact") {
  CHECK(select_fact(col({0.1, 0.7, 0.2})) == 1);
  CHECK(select_fact(col({0.5, 0.5})) == 0);
  CHECK(select_fact(col({0.1, 0.2, 0.7})) == 2);
  Matrix row(1, 3);
  row << 0.2, 0.2, 0.6;
  CHECK(select_fact(row) == 2);
  CHECK_THROWS_AS(select_fact(Matrix(0, 1)), ContractError);
}

TEST_CASE("select_fact is invariant to positive rescaling of energies") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3), scale(0.05, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 8);
    Vector e(n);
    for (Index i = 0; i < n; ++i) e(i) = u(rng);
    const Mask all(static_cast<std::size_t>(n), true);
    const int a = select_fact(Matrix(masked_softmax_values(e, all)));
    const int b = select_fact(Matrix(masked_softmax_values(scale(rng) * e, all)));
    CHECK(a == b);
  }
}

TEST_CASE("fact attention") {
  Model model = fixtures::random_model(fixtures::tiny_config(3, 5, 2), fixtures::vocab_of({"a", "b"}), 4);
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);

  // Identical facts: uniform whatever the state.
  Var same = tape.constant(Matrix::Constant(3, 4, 0.3));
  Var h = tape.constant(col({0.4, -1.0, 2.0}));
  Var alpha = fact_attention_from_facts(w, same, h, Mask(4, true));
  for (int i = 0; i < 4; ++i) CHECK(alpha.value()(0, i) == doctest::Approx(0.25));

  // Wrong shapes.
  CHECK_THROWS_AS(fact_attention_from_facts(w, same, tape.constant(col({1, 2})), Mask(4, true)), ShapeError);
  CHECK_THROWS_AS(fact_attention_from_facts(w, same, h, Mask(3, true)), ShapeError);
}

TEST_CASE("fact attention with zero output weights is uniform") {
  Model model = fixtures::random_model(fixtures::tiny_config(3, 5, 2), fixtures::vocab_of({"a", "b"}), 4);
  model.params.attn_w2.value().setZero();
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix f(3, 3);
  for (Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
  Var alpha = fact_attention_from_facts(w, tape.constant(f), tape.constant(col({1, 2, 3})), Mask(3, true));
  for (int i = 0; i < 3; ++i) CHECK(alpha.value()(0, i) == doctest::Approx(1.0 / 3));
}

TEST_CASE("fact attention on hand-set energies with the mean slot masked") {
  ModelConfig c = fixtures::tiny_config(1, 4, 1);
  Model model = fixtures::random_model(c, fixtures::vocab_of({"a"}), 1);
  model.params.attn_w1.value() << 1.0, 0.0;
  model.params.attn_b1.value().setZero();
  model.params.attn_w2.value() << 4.0;
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  Matrix f(1, 3);
  f << std::atanh(0.25), std::atanh(0.5), 0.9;  // energies 1 and 2
  Var alpha = fact_attention_from_facts(w, tape.constant(f), tape.constant(col({0.0})), {true, true, false});
  CHECK(alpha.value()(0, 0) == doctest::Approx(0.2689414214).epsilon(1e-9));
  CHECK(alpha.value()(0, 1) == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(alpha.value()(0, 2) == 0.0);
}

TEST_CASE("GRU step") {
  ModelConfig c = fixtures::tiny_config(3, 5, 2);
  Model model = fixtures::random_model(c, fixtures::vocab_of({"a", "b"}), 6);
  for (Tensor* t : {&model.params.gru_wx, &model.params.gru_uzr, &model.params.gru_un, &model.params.gru_b}) {
    t->value().setZero();
  }
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  Var h = tape.constant(col({1.0, -2.0, 0.5}));
  Var x = tape.constant(Matrix::Constant(c.gru_input_dim(), 1, 0.7));
  CHECK(gru_step(w, x, h).value() == col({0.5, -1.0, 0.25}));
  CHECK(gru_step(w, x, tape.constant(Matrix::Zero(3, 1))).value().norm() == 0.0);
  CHECK_THROWS_AS(gru_step(w, tape.constant(Matrix::Zero(4, 1)), h), ShapeError);
  CHECK_THROWS_AS(decoder_step(w, tape.constant(Matrix::Zero(3, 1)), tape.constant(Matrix::Zero(3, 1)),
                               tape.constant(Matrix::Zero(3, 1)), h),
                  ShapeError);
}

TEST_CASE("GRU gradients match finite differences") {
  ModelConfig c = fixtures::tiny_config(4, 6, 3);
  Model model = fixtures::random_model(c, fixtures::vocab_of({"a", "b", "c"}), 10);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix x(c.gru_input_dim(), 1), h(4, 1), proj(4, 1);
  for (Index i = 0; i < x.size(); ++i) x(i, 0) = u(rng);
  for (Index i = 0; i < 4; ++i) h(i, 0) = u(rng), proj(i, 0) = u(rng);
  std::vector<Tensor*> gru{&model.params.gru_wx, &model.params.gru_uzr, &model.params.gru_un, &model.params.gru_b};
  auto loss = [&](Tape& t) {
    DecoderWeights w = bind_weights(t, model.params, model.config);
    Var h1 = gru_step(w, t.constant(x), t.constant(h));
    Var h2 = gru_step(w, t.constant(x), h1);
    return sum(mul(h2, t.constant(proj)));
  };
  const GradCheckResult r = grad_check(loss, gru, 1e-6);
  CHECK(r.checked == c.gru_input_dim() * 12 + 8 * 4 + 16 + 12);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("vocabulary and copy heads") {
  ModelConfig c = fixtures::tiny_config(2, 5, 4);
  Model model = fixtures::random_model(c, fixtures::vocab_of({"a", "b"}), 12);
  Tape tape(false);
  DecoderWeights w = bind_weights(tape, model.params, model.config);
  Var ctx = tape.constant(col({0.3, -0.2}));
  Var h = tape.constant(col({0.5, 0.1}));

  const Matrix p = vocab_distribution(w, ctx, h).value();
  CHECK(p.rows() == 5);
  CHECK(std::abs(p.sum() - 1.0) <= 1e-12);

  model.params.copy_wc.value().setZero();
  Var q = copy_distribution(w, ctx, h, 4);
  for (int i = 0; i < 4; ++i) CHECK(q.value()(i, 0) == doctest::Approx(0.25));
  Var single = copy_distribution(w, ctx, h, 1);
  CHECK(single.value()(0, 0) == 1.0);
  CHECK(single.value().bottomRows(3).norm() == 0.0);
  CHECK_THROWS_AS(copy_distribution(w, ctx, h, 0), ContractError);
  CHECK_THROWS_AS(copy_distribution(w, ctx, h, 5), ContractError);

  model.params.vocab_wa.value().setZero();
  const Matrix flat = vocab_distribution(w, ctx, h).value();
  for (int i = 0; i < 5; ++i) CHECK(flat(i, 0) == doctest::Approx(0.2));
}

TEST_CASE("two-word vocabulary head with logits 0 and ln 3") {
  Tape tape(false);
  DecoderWeights w;
  w.embedding_dim = 1;
  w.hidden_dim = 1;
  w.vocab_wb = tape.constant(Matrix::Zero(1, 2));
  w.vocab_bb = tape.constant(Matrix::Zero(1, 1));
  w.vocab_wa = tape.constant(Matrix::Zero(2, 1));
  w.vocab_ba = tape.constant(col({0.0, std::log(3.0)}));
  const Matrix p = vocab_distribution(w, tape.constant(col({1})), tape.constant(col({1}))).value();
  CHECK(p(0, 0) == doctest::Approx(0.25));
  CHECK(p(1, 0) == doctest::Approx(0.75));
}

TEST_CASE("hand-routed model emits the copied street and stops") {
  const Model model = fixtures::routing_model();
  const Entity e = fixtures::street_entity();
  const DecodeResult r = greedy_decode(model, e, 10);
  CHECK(r.tokens == Tokens{"street"});
  REQUIRE(r.steps.size() == 2);
  CHECK(r.steps[0].slot == 0);
  CHECK(r.steps[0].source == AlignSource::Fact);
  CHECK(r.steps[0].position == 0);
  CHECK(r.steps[1].slot == 2);
  CHECK(r.steps[1].token == "<EOS>");
  for (const auto& s : r.steps) CHECK(std::abs(s.alpha.sum() - 1.0) <= 1e-12);
}

TEST_CASE("copying location emits elsloo") {
  Model model = fixtures::routing_model();
  // Move the first-step bump onto the location fact (value -1).
  const double s = 3.0, delta = 1.0;
  model.params.attn_b1.value() << s + delta, s - delta;
  model.params.attn_w1.value()(0, 1) = 0.0;
  model.params.attn_w1.value()(1, 1) = 0.0;
  const DecodeResult r = greedy_decode(model, fixtures::street_entity(), 1);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].slot == 1);
  CHECK(r.tokens == Tokens{"elsloo"});
}

TEST_CASE("greedy decoding contracts") {
  const Vocabulary vocab = fixtures::vocab_of({"street", "in", "elsloo", "house"});
  ModelConfig c = fixtures::tiny_config(6, vocab.size(), 5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model model = fixtures::random_model(c, vocab, seed);
    // Push the vocabulary head towards the specials we must strip.
    model.params.vocab_ba.value()(Vocabulary::kUnk, 0) = static_cast<double>(seed % 3);
    const int max_len = 1 + static_cast<int>(seed % 7);
    const DecodeResult r = greedy_decode(model, fixtures::street_entity(true), max_len);
    CHECK(r.steps.size() <= static_cast<std::size_t>(max_len));
    CHECK(r.tokens.size() <= static_cast<std::size_t>(max_len));
    for (const auto& t : r.tokens) {
      CHECK(t != "<UNK>");
      CHECK(t != "<EOS>");
      CHECK(t != "<SOS>");
    }
    for (const auto& s : r.steps) {
      CHECK(std::abs(s.alpha.sum() - 1.0) <= 1e-6);
      for (Index i = 0; i < s.alpha.size(); ++i) {
        if (!s.mask[static_cast<std::size_t>(i)]) CHECK(s.alpha(i) == 0.0);
      }
      // Exactly one head per step, determined by the selected slot.
      CHECK((s.source == AlignSource::Fact) == (s.slot < 4));
      CHECK((s.position >= 0) == (s.source == AlignSource::Fact));
    }
  }
}

TEST_CASE("copy-only decoding never selects the mean fact") {
  const Vocabulary vocab = fixtures::vocab_of({"street", "in"});
  ModelConfig c = fixtures::tiny_config(5, vocab.size(), 5);
  c.copy_only = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Model model = fixtures::random_model(c, vocab, seed);
    const DecodeResult r = greedy_decode(model, fixtures::street_entity(true), 6);
    CHECK(r.steps.size() == 6);
    for (const auto& s : r.steps) {
      CHECK(s.source == AlignSource::Fact);
      CHECK(s.alpha(4) == 0.0);
    }
  }
}

TEST_CASE("facts without factual words are skipped at selection") {
  Model model = fixtures::routing_model();
  model.params.attn_w2.value().setZero();  // uniform attention: ties go to slot 0
  const Entity e = fixtures::make_entity("e", {{"instance of", "of the"}, {"location", "Elsloo"}});
  const DecodeResult r = greedy_decode(model, e, 1);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].slot == 1);
  CHECK(r.steps[0].alpha(0) == 0.0);
  CHECK(r.steps[0].alpha(1) == doctest::Approx(0.5));
  CHECK(r.tokens == Tokens{"elsloo"});
}

TEST_CASE("parallel decoding matches sequential decoding") {
  const Vocabulary vocab = fixtures::vocab_of({"street", "in", "elsloo"});
  const Model model = fixtures::random_model(fixtures::tiny_config(6, vocab.size(), 4), vocab, 99);
  std::vector<Entity> entities;
  for (int i = 0; i < 9; ++i) entities.push_back(fixtures::street_entity(i % 2 == 0));
  CHECK(decode_all(model, entities, 5, 1) == decode_all(model, entities, 5, 3));
}
