#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "intent_miner/errors.hpp"
#include "intent_miner/features.hpp"

using namespace intent_miner;
using namespace intent_miner::features;

TEST_CASE("syllables") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("the") == 1);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("free") == 1);
  CHECK(count_syllables("recipe") == 2);
  CHECK(count_syllables("readability") == 5);
  CHECK(count_syllables("rhythm") == 1);
  CHECK(count_syllables("xyz") == 1);
}

TEST_CASE("text counts") {
  const auto c = count_text("The cat sat.");
  CHECK(c.words == 3);
  CHECK(c.sentences == 1);
  CHECK(c.letters == 9);
  CHECK(c.syllables == 3);
  CHECK(c.polysyllables == 0);
  CHECK(count_text("Version 1.2 is out. Really? Yes!").sentences == 3);
}

TEST_CASE("readability") {
  SUBCASE("empty text") {
    const auto r = readability("");
    CHECK(r.flesch_kincaid == 0.0);
    CHECK(r.ari == 0.0);
    CHECK(r.smog == 0.0);
  }
  SUBCASE("the cat sat") {
    const auto r = readability("The cat sat.");
    CHECK(r.ari == doctest::Approx(4.71 * 3.0 + 0.5 * 3.0 - 21.43).epsilon(1e-12));
    CHECK(std::abs(r.ari - (-5.80)) <= 0.01);
    CHECK(r.flesch_kincaid == doctest::Approx(0.39 * 3.0 + 11.8 * 1.0 - 15.59).epsilon(1e-12));
    CHECK(r.smog == doctest::Approx(3.1291).epsilon(1e-12));
  }
  SUBCASE("polysyllables feed SMOG") {
    const auto c = count_text("Documentation is unbelievably complicated.");
    CHECK(c.polysyllables == 3);
    const auto r = readability("Documentation is unbelievably complicated.");
    CHECK(r.smog == doctest::Approx(1.0430 * std::sqrt(3.0 * 30.0 / 1.0) + 3.1291));
  }
}

TEST_CASE("sentiment") {
  const Lexicon lex({{"good", 1.9}, {"bad", -2.5}});
  SUBCASE("empty") {
    const auto s = sentiment("", lex);
    CHECK(s.pos == 0.0);
    CHECK(s.neu == 1.0);
    CHECK(s.neg == 0.0);
    CHECK(s.compound == 0.0);
  }
  SUBCASE("no matches") {
    const auto s = sentiment("the server restarted", lex);
    CHECK(s.neu == 1.0);
    CHECK(s.compound == 0.0);
  }
  SUBCASE("single positive word") {
    const auto s = sentiment("good", lex);
    CHECK(s.compound == doctest::Approx(1.9 / std::sqrt(1.9 * 1.9 + 15.0)).epsilon(1e-12));
    CHECK(std::abs(s.compound - 0.441) < 1e-3);
    CHECK(s.pos == doctest::Approx(1.0));
  }
  SUBCASE("negation flips the sign") {
    const auto s = sentiment("not good", lex);
    CHECK(s.compound == doctest::Approx(-1.9 / std::sqrt(1.9 * 1.9 + 15.0)).epsilon(1e-12));
    CHECK(s.neg > 0.0);
  }
  SUBCASE("negation reaches three tokens back, not four") {
    CHECK(sentiment("not very very good", lex).compound < 0.0);
    CHECK(sentiment("not a b c good", lex).compound > 0.0);
  }
  SUBCASE("shares add up to one") {
    const auto s = sentiment("Good, but the bad part is bad.", lex);
    CHECK(s.pos + s.neu + s.neg == doctest::Approx(1.0));
    CHECK(s.pos > 0.0);
    CHECK(s.neg > s.pos);
    CHECK(s.compound < 0.0);
  }
}

TEST_CASE("lexicon parsing") {
  const auto lex = Lexicon::parse("# comment\ngood\t1.9\nawful\t-3.4\n\n");
  CHECK(lex.size() == 2);
  CHECK(lex.valence("good") == 1.9);
  CHECK_FALSE(lex.valence("missing").has_value());
  CHECK_THROWS_AS(Lexicon::parse("good\tlots\n"), ValidationError);
  CHECK_THROWS_AS(Lexicon::parse("good\t9\n"), ValidationError);
  CHECK(Lexicon::bundled().size() > 100);
  CHECK(Lexicon::bundled().valence("good").value() > 0.0);
}

TEST_CASE("feature layout") {
  codeblock::ContentCategoryDistribution dist{0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
  TextualFeatures tf;
  tf.word_count = 12;
  tf.readability = {1.0, 2.0, 3.0};
  tf.sentiment = {0.2, 0.7, 0.1, 0.3};
  const auto raw = concat_features(dist, tf);
  const RawFeatures expected{0.1, 0.2, 0.3, 0.15, 0.15, 0.1, 12, 1.0, 2.0, 3.0, 0.2, 0.7, 0.1, 0.3};
  CHECK(raw == expected);
}

TEST_CASE("standardizer") {
  SUBCASE("identity") {
    RawFeatures x{};
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) - 3.5;
    CHECK(Standardizer().apply(x) == x);
  }
  SUBCASE("two-point word count and a constant dimension") {
    RawFeatures a{}, b{};
    a[6] = 2.0;
    b[6] = 4.0;
    a[0] = b[0] = 7.0;
    const std::vector<RawFeatures> rows{a, b};
    const auto s = Standardizer::fit(rows);
    CHECK(s.apply(b)[6] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.apply(a)[6] == doctest::Approx(-1.0).epsilon(1e-15));
    RawFeatures probe{};
    probe[0] = 9.0;
    CHECK(s.apply(probe)[0] == 9.0);
  }
  SUBCASE("json round trip") {
    RawFeatures a{}, b{}, c{};
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<double>(i);
      b[i] = static_cast<double>(i * i);
      c[i] = 1.0;
    }
    const std::vector<RawFeatures> rows{a, b, c};
    const auto s = Standardizer::fit(rows);
    const auto back = Standardizer::from_json(nlohmann::json::parse(s.to_json().dump()));
    CHECK(back.apply(b) == s.apply(b));
  }
}

TEST_CASE("extractor without a code-block classifier") {
  const FeatureExtractor ex(std::nullopt, Lexicon::bundled());
  preprocess::CleanPost post;
  post.title_text = "t";
  post.description_text = "This is a good question. It fails badly.";
  post.code_blocks = {"int x;"};
  const auto raw = ex.raw(post);
  CHECK(raw[0] == 1.0);
  for (std::size_t i = 1; i < kNumContentCategories; ++i) CHECK(raw[i] == 0.0);
  CHECK(raw[6] == 8.0);
  const auto tf = textual_features(post.description_text, Lexicon::bundled());
  CHECK(raw[13] == tf.sentiment.compound);
}
