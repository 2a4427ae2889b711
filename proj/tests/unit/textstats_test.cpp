#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pdi/errors.hpp"
#include "pdi/textstats.hpp"
#include "support/oracles.hpp"

namespace pdi {
namespace {

std::vector<std::string> segs(std::initializer_list<const char*> s) { return {s.begin(), s.end()}; }

std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
  static const char* words[] = {"Foo", "bar", "baz", "qux", "a1", "B2", "x_y", "émile", "42"};
  static const char* seps[] = {" ", ", ", "\n", "--", "\t("};
  std::string s;
  const std::size_t n = rng() % (max_words + 1);
  for (std::size_t i = 0; i < n; ++i) s += std::string(words[rng() % 9]) + seps[rng() % 5];
  return s;
}

TEST(Tokenize, SplitsOnNonWordBytesAndLowercases) {
  EXPECT_EQ(tokenize("Hello, World_2 x-y"), segs({"hello", "world", "2", "x", "y"}));
  EXPECT_EQ(tokenize("naïve café"), segs({"naïve", "café"}));
  EXPECT_TRUE(tokenize("  ,;  ").empty());
  TokenizerConfig keep;
  keep.lowercase = false;
  EXPECT_EQ(tokenize("ABC def", keep), segs({"ABC", "def"}));
}

TEST(Tokenize, MatchesOracleOnRandomText) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto t = random_text(rng, 20);
    EXPECT_EQ(tokenize(t), oracle::tokens(t)) << t;
  }
}

TEST(BuildVocab, UnionOfTokens) {
  const auto a = segs({"a b", "b c"});
  EXPECT_EQ(build_vocab(a)->tokens(), segs({"a", "b", "c"}));
  const auto b = segs({"A a"});
  EXPECT_EQ(build_vocab(b)->size(), 1u);
}

TEST(BuildVocab, SizeMatchesSetOracle) {
  std::mt19937_64 rng(2);
  std::vector<std::string> segments;
  std::set<std::string> expected;
  for (int i = 0; i < 1000; ++i) {
    segments.push_back(random_text(rng, 6) + " w" + std::to_string(rng() % 400));
    for (const auto& t : oracle::tokens(segments.back())) expected.insert(t);
  }
  EXPECT_EQ(build_vocab(segments)->size(), expected.size());
}

TEST(BuildVocab, EmptyCorpusThrows) {
  const auto s = segs({"", " ,"});
  try {
    build_vocab(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(Distribution, SmoothedFormula) {
  const auto v = build_vocab(segs({"a b"}));
  const auto d = distribution("a a b", v, 1.0);
  EXPECT_DOUBLE_EQ(d.probs[0], 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(d.probs[1], 2.0 / 5.0);
  const double alpha = 0.002;
  const auto e = distribution("a a b", v, alpha);
  EXPECT_DOUBLE_EQ(e.probs[0], (2 + alpha) / (3 + 2 * alpha));
  EXPECT_EQ(e.total_raw_count, 3);
}

TEST(Distribution, EmptySegmentIsUniform) {
  const auto v = build_vocab(segs({"a b c d"}));
  for (double p : distribution("", v, 0.002).probs) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Distribution, OutOfVocabularyIgnored) {
  const auto v = build_vocab(segs({"a"}));
  const auto d = distribution("a zzz", v, 0.5);
  EXPECT_EQ(d.total_raw_count, 1);
  EXPECT_DOUBLE_EQ(d.probs[0], 1.0);
}

TEST(Distribution, NonPositiveAlphaThrows) {
  const auto v = build_vocab(segs({"a"}));
  EXPECT_THROW(distribution("a", v, 0.0), Error);
  EXPECT_THROW(distribution("a", v, -1.0), Error);
}

TEST(Distribution, FiftyTokenFixtureMatchesHighPrecision) {
  std::mt19937_64 rng(3);
  std::string text;
  for (int i = 0; i < 50; ++i) text += "t" + std::to_string(rng() % 12) + " ";
  const std::string all[] = {text, "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11"};
  const auto v = build_vocab(all);
  const auto d = distribution(text, v, 0.002);
  const auto toks = oracle::tokens(text);
  for (std::size_t i = 0; i < v->size(); ++i) {
    long double c = 0;
    for (const auto& t : toks) c += t == v->tokens()[i];
    const long double want = (c + 0.002L) / (50.0L + 0.002L * v->size());
    EXPECT_NEAR(d.probs[i], static_cast<double>(want), 1e-12);
  }
}

TEST(Divergence, IdentityAndNonNegativity) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::string a = random_text(rng, 10) + " foo", b = random_text(rng, 10);
    const std::string s[] = {a, b};
    const auto v = build_vocab(s);
    const auto p = distribution(a, v, 0.01);
    const auto q = distribution(b, v, 0.01);
    EXPECT_EQ(kl(p, p), 0.0);
    EXPECT_GE(kl(p, q), 0.0);
    EXPECT_LE(jsd(p, p), 1e-12);
    EXPECT_EQ(similarity(p, p), 1.0 - jsd(p, p));
    EXPECT_NEAR(jsd(p, q), jsd(q, p), 1e-12);
  }
}

TEST(Divergence, KlMatchesHighPrecisionOnThreeTokens) {
  const auto v = build_vocab(segs({"a b c"}));
  const auto p = distribution("a a b", v, 0.3);
  const auto q = distribution("c b c c", v, 0.3);
  long double want = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const long double pi = p.probs[i], qi = q.probs[i];
    want += pi * std::log2(pi / qi);
  }
  EXPECT_NEAR(kl(p, q), static_cast<double>(want), 1e-12);
}

TEST(Divergence, NearDisjointIsAlmostOne) {
  const auto v = build_vocab(segs({"a b"}));
  const auto p = distribution("a", v, 1e-9);
  const auto q = distribution("b", v, 1e-9);
  EXPECT_NEAR(jsd(p, q), 1.0, 1e-6);
  EXPECT_NEAR(similarity(p, q), 0.0, 1e-6);
  EXPECT_NEAR(jsd(p, q), oracle::jsd({"a"}, {"b"}, {"a", "b"}, 1e-9), 1e-10);
}

TEST(Divergence, VocabMismatchThrows) {
  const auto p = distribution("a", build_vocab(segs({"a b"})), 0.1);
  const auto q = distribution("a", build_vocab(segs({"a c"})), 0.1);
  try {
    jsd(p, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VocabMismatch);
  }
}

TEST(Jaccard, Basics) {
  EXPECT_DOUBLE_EQ(jaccard("x y z", "z y x"), 1.0);
  EXPECT_DOUBLE_EQ(jaccard("a b", "b c"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard("a b", "c d"), 0.0);
  EXPECT_DOUBLE_EQ(jaccard("", ""), 1.0);
}

TEST(Jaccard, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto a = random_text(rng, 8), b = random_text(rng, 8);
    EXPECT_EQ(jaccard(a, b), oracle::jaccard(a, b));
    EXPECT_EQ(jaccard(a, b), jaccard(b, a));
  }
}

TEST(Entropy, Basics) {
  EXPECT_DOUBLE_EQ(entropy("a b c d"), 2.0);
  EXPECT_DOUBLE_EQ(entropy("z z z z"), 0.0);
  EXPECT_DOUBLE_EQ(entropy(""), 0.0);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_text(rng, 30);
    EXPECT_NEAR(entropy(t), oracle::entropy(t), 1e-12);
  }
}

TEST(NgramNovelty, Basics) {
  EXPECT_DOUBLE_EQ(ngram_novelty("a b c d", "a b c d", 3), 0.0);
  EXPECT_DOUBLE_EQ(ngram_novelty("", "a b c d", 3), 1.0);
  EXPECT_DOUBLE_EQ(ngram_novelty("a b c", "a b", 3), 0.0);
  EXPECT_DOUBLE_EQ(ngram_novelty("a b c", "a b c d", 3), 0.5);
  EXPECT_THROW(ngram_novelty("a", "b", 0), Error);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_text(rng, 12), c = random_text(rng, 12);
    EXPECT_EQ(ngram_novelty(p, c, 3), oracle::novelty(p, c, 3));
  }
}

TEST(CompensatedSum, RecoversSmallTerms) {
  CompensatedSum s;
  s.add(1.0L);
  for (int i = 0; i < 1000; ++i) s.add(1e-20L);
  s.add(-1.0L);
  EXPECT_NEAR(static_cast<double>(s.value()), 1e-17, 1e-25);
}

}  // namespace
}  // namespace pdi
