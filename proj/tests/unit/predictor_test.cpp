#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "vfocus/composer.hpp"
#include "vfocus/errors.hpp"
#include "vfocus/predictor.hpp"

namespace vfocus {
namespace {

using E = LogicExpr;

E one_and_two_or_three() {
  return E::conjunction({E::literal(1), E::disjunction({E::literal(2), E::literal(3)})});
}

Label ask(Predictor& p, const StateVector& s, std::string_view id = "img") {
  return p.predict(Query{id, &s, nullptr});
}

TEST(Label, MustBeNonEmpty) {
  EXPECT_THROW(Label(""), InvalidInput);
  EXPECT_EQ(Label("cat").value(), "cat");
}

TEST(SyntheticLogicModel, Examples) {
  SyntheticLogicModel m(one_and_two_or_three());
  EXPECT_EQ(ask(m, StateVector::from_bits("1100")).value(), "target");
  EXPECT_EQ(ask(m, StateVector::from_bits("0111")).value(), "other");
  EXPECT_EQ(ask(m, StateVector::all(4)).value(), "target");
  EXPECT_THROW(m.predict(Query{"img", nullptr, nullptr}), InvalidInput);
  EXPECT_THROW(SyntheticLogicModel(E::truth(), Label("a"), Label("a")), InvalidInput);
}

TEST(Predictor, BatchMatchesSequential) {
  SyntheticLogicModel m(one_and_two_or_three());
  std::vector<StateVector> states;
  for (std::uint32_t mask = 0; mask < 16; ++mask) {
    StateVector s(4);
    for (std::size_t r = 1; r <= 4; ++r) s.set(r, (mask >> (r - 1)) & 1u);
    states.push_back(s);
  }
  std::vector<Query> queries;
  for (const auto& s : states) queries.push_back(Query{"img", &s, nullptr});
  const auto batch = m.predict_batch(queries);
  ASSERT_EQ(batch.size(), states.size());
  for (std::size_t i = 0; i < states.size(); ++i) EXPECT_EQ(batch[i], ask(m, states[i]));
  EXPECT_EQ(m.predict_batch(std::span<const Query>(queries.data(), 1)).front(), ask(m, states[0]));
  EXPECT_THROW(m.predict_batch({}), InvalidInput);
}

class FailsAt : public Predictor {
 public:
  explicit FailsAt(std::size_t call) : fail_(call) {}
  Label predict(const Query&) override {
    if (calls_++ == fail_) throw PredictorError(PredictorFailure::Model, "boom");
    return Label("x");
  }
  bool needs_pixels() const override { return false; }

 private:
  std::size_t fail_;
  std::size_t calls_ = 0;
};

TEST(Predictor, BatchErrorCarriesIndex) {
  FailsAt m(2);
  const StateVector s = StateVector::all(1);
  const std::vector<Query> q(4, Query{"img", &s, nullptr});
  try {
    m.predict_batch(q);
    FAIL() << "expected a predictor error";
  } catch (const PredictorError& e) {
    EXPECT_EQ(e.kind(), PredictorFailure::Model);
    ASSERT_TRUE(e.batch_index());
    EXPECT_EQ(*e.batch_index(), 2u);
  }
}

TEST(PixelProbingLogicModel, AgreesWithStateModelOnComposedImages) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng() % 8;
    const auto scene = testing::strip_scene(testing::random_areas(rng, m, 1, 6));
    const E formula = testing::random_formula(rng, m);
    SyntheticLogicModel by_state(formula);
    PixelProbingLogicModel by_pixels(scene.image, scene.partition, formula);
    for (const FillPolicy& fill : {FillPolicy::gray(), FillPolicy::constant({0, 0, 0})}) {
      for (int k = 0; k < 10; ++k) {
        StateVector s(m);
        for (std::size_t r = 1; r <= m; ++r) s.set(r, rng() % 2);
        const RgbImage composed = compose(scene.image, scene.partition, s, fill);
        EXPECT_EQ(by_pixels.decode(composed), s);
        EXPECT_EQ(by_pixels.predict(Query{"x", nullptr, &composed}), ask(by_state, s));
      }
    }
  }
}

class Counting : public Predictor {
 public:
  explicit Counting(bool flip) : flip_(flip) {}
  Label predict(const Query& q) override {
    const std::size_t n = calls_++;
    if (flip_) return Label(n % 2 ? "odd" : "even");
    return Label(q.state->bits());
  }
  bool needs_pixels() const override { return false; }
  bool deterministic() const override { return !flip_; }
  std::size_t calls() const { return calls_; }

 private:
  bool flip_;
  std::atomic<std::size_t> calls_{0};
};

TEST(CachingPredictor, TransparentAndCounting) {
  Counting inner(false);
  CachingPredictor cache(inner);
  const auto a = StateVector::from_bits("10");
  const auto b = StateVector::from_bits("01");
  EXPECT_EQ(ask(cache, a).value(), "10");
  EXPECT_EQ(ask(cache, a).value(), "10");
  EXPECT_EQ(ask(cache, b).value(), "01");
  EXPECT_EQ(ask(cache, a, "other-image").value(), "10");
  EXPECT_EQ(inner.calls(), 3u);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 3u);
  EXPECT_EQ(cache.size(), 3u);
  EXPECT_FALSE(cache.needs_pixels());
}

TEST(CachingPredictor, FreezesNonDeterministicAnswers) {
  Counting inner(true);
  CachingPredictor cache(inner);
  const auto s = StateVector::all(2);
  const Label first = ask(cache, s);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(ask(cache, s), first);
  EXPECT_EQ(inner.calls(), 1u);
  EXPECT_FALSE(cache.deterministic());
}

TEST(CachingPredictor, ForwardsOnlyMissesAndRemapsErrorIndex) {
  FailsAt inner(1);
  CachingPredictor cache(inner);
  const auto s1 = StateVector::from_bits("1");
  const auto s0 = StateVector::from_bits("0");
  ask(cache, s1);  // call 0 succeeds and is cached
  const std::vector<Query> q = {Query{"img", &s1, nullptr}, Query{"img", &s0, nullptr}};
  try {
    cache.predict_batch(q);
    FAIL() << "expected a predictor error";
  } catch (const PredictorError& e) {
    ASSERT_TRUE(e.batch_index());
    EXPECT_EQ(*e.batch_index(), 1u);
  }
  EXPECT_EQ(cache.size(), 1u);
}

TEST(CachingPredictor, ConcurrentUseIsConsistent) {
  Counting inner(false);
  CachingPredictor cache(inner);
  std::vector<StateVector> states;
  for (std::uint32_t mask = 0; mask < 32; ++mask) {
    StateVector s(5);
    for (std::size_t r = 1; r <= 5; ++r) s.set(r, (mask >> (r - 1)) & 1u);
    states.push_back(s);
  }
  std::atomic<int> wrong{0};
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&] {
        for (int round = 0; round < 20; ++round)
          for (const auto& s : states)
            if (ask(cache, s).value() != s.bits()) ++wrong;
      });
  }
  EXPECT_EQ(wrong.load(), 0);
  EXPECT_EQ(cache.size(), states.size());
  EXPECT_EQ(cache.hits() + cache.misses(), 8u * 20u * states.size());
}

TEST(WireFormat, RequestCarriesBase64Png) {
  RgbImage img(2, 1, Rgb{1, 2, 3});
  const std::string line = encode_request("q7", img);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("\"id\":\"q7\""), std::string::npos);
  const auto start = line.find("\"image_png_b64\":\"") + 17;
  const auto end = line.find('"', start);
  EXPECT_EQ(decode_rgb_png(base64_decode(line.substr(start, end - start))), img);
}

TEST(WireFormat, DecodeResponse) {
  const auto ok = decode_response(R"({"id":"q1","label":"cat"})");
  EXPECT_EQ(ok.id, "q1");
  EXPECT_EQ(ok.label, "cat");
  EXPECT_TRUE(ok.error.empty());
  const auto err = decode_response(R"({"id":"q2","error":"bad input"})");
  EXPECT_EQ(err.error, "bad input");

  for (const char* bad : {"", "not json", "[]", R"({"label":"x"})", R"({"id":3,"label":"x"})",
                          R"({"id":"q","label":""})", R"({"id":"q"})"}) {
    try {
      decode_response(bad);
      ADD_FAILURE() << bad;
    } catch (const PredictorError& e) {
      EXPECT_EQ(e.kind(), PredictorFailure::Malformed) << bad;
    }
  }
}

TEST(ConnectModel, RejectsUnknownSchemes) {
  EXPECT_THROW(connect_model("grpc://x"), InvalidInput);
  EXPECT_THROW(connect_model("exec:"), InvalidInput);
  EXPECT_THROW(connect_model("exec:   "), InvalidInput);
}

}  // namespace
}  // namespace vfocus
