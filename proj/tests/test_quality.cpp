#include <gtest/gtest.h>

#include <cmath>

#include "evadebench/errors.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/reference.hpp"
#include "support.hpp"

using namespace evadebench;
using namespace evadebench::quality;

namespace {

// Exponential oracle: longest common subsequence by enumerating every
// subsequence of the shorter sequence.
std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < l.size() && l[j] != s[i]) ++j;
      if (j == l.size()) ok = false;
      else {
        ++j;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

}  // namespace

TEST(RougeL, KnownValues) {
  EXPECT_DOUBLE_EQ(rouge_l("the cat sat on the mat", "the cat sat on the mat"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("a b c", "x y z"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("", "a"), 0.0);
  // LCS("a b c d", "a c e") = 2, P = 2/3, R = 2/4
  EXPECT_NEAR(rouge_l("a b c d", "a c e"), 2 * (2.0 / 3) * 0.5 / (2.0 / 3 + 0.5), 1e-15);
  EXPECT_DOUBLE_EQ(rouge_l("A, b.", "a b"), 1.0);
}

TEST(RougeL, MatchesBruteForceOnRandomSequences) {
  Rng rng(8);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::string> a(1 + rng.below(10)), b(1 + rng.below(10));
    for (auto& x : a) x = alphabet[rng.below(alphabet.size())];
    for (auto& x : b) x = alphabet[rng.below(alphabet.size())];
    const auto lcs = brute_lcs(a, b);
    ASSERT_EQ(lcs_length(a, b), lcs);
    const double p = static_cast<double>(lcs) / b.size(), r = static_cast<double>(lcs) / a.size();
    const double f = lcs == 0 ? 0.0 : 2 * p * r / (p + r);
    ASSERT_NEAR(rouge_l_tokens(a, b), f, 1e-15);
    ASSERT_EQ(rouge_l_tokens(a, b), rouge_l_tokens(b, a));
  }
}

TEST(RougeL, LongSequencesUseHeapTable) {
  std::vector<std::string> a(100, "x"), b(80, "x");
  EXPECT_EQ(lcs_length(a, b), 80u);
}

TEST(Syllables, Heuristic) {
  EXPECT_EQ(count_syllables("cat"), 1);
  EXPECT_EQ(count_syllables("make"), 1);
  EXPECT_EQ(count_syllables("table"), 2);
  EXPECT_EQ(count_syllables("beautiful"), 3);
  EXPECT_EQ(count_syllables("rhythm"), 1);
  EXPECT_EQ(count_syllables("the"), 1);
  EXPECT_EQ(count_syllables("syzygy"), 3);
  EXPECT_EQ(count_syllables("bcd"), 1);
}

TEST(Flesch, FormulaOnHandCounts) {
  const std::string s = "The cat sat. The table is beautiful.";
  const auto c = readability_counts(s);
  EXPECT_EQ(c.sentences, 2u);
  EXPECT_EQ(c.words, 7u);
  EXPECT_EQ(c.syllables, 1u + 1 + 1 + 1 + 2 + 1 + 3);
  EXPECT_NEAR(flesch_reading_ease(s), 206.835 - 1.015 * 7.0 / 2 - 84.6 * 10.0 / 7, 1e-12);
  EXPECT_THROW(flesch_reading_ease("   "), InputError);
  EXPECT_THROW(flesch_reading_ease("..."), InputError);
}

TEST(Cosine, Basics) {
  const std::vector<double> a = {1, 0, 1}, b = {1, 0, 1}, c = {0, 1, 0}, z = {0, 0, 0};
  EXPECT_DOUBLE_EQ(cosine(a, b), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, c), 0.0);
  EXPECT_THROW(cosine(a, z), InputError);
  EXPECT_THROW(cosine(a, std::vector<double>{1, 2}), InputError);
  lm::HashingEmbedder emb(256);
  EXPECT_NEAR(cosine_similarity(emb, "same words here", "here words same"), 1.0, 1e-12);
}

TEST(Perplexity, ExpOfMeanNegativeLogprob) {
  lm::UniformModel m({"a", "b", "c", "d"});
  EXPECT_NEAR(perplexity(m, "a b c"), 4.0, 1e-12);
  const auto toy = evadebench::testing::toy_model(2);
  const auto st = toy.score_text("the cat sat");
  double s = 0.0;
  for (const auto& t : st.tokens) s += t.logprob;
  EXPECT_NEAR(perplexity(toy, "the cat sat"), std::exp(-s / 3), 1e-12);
  EXPECT_THROW(perplexity(toy, "  "), InputError);
}

TEST(QualityReport, UnchangedTextHasZeroDeltas) {
  const auto toy = evadebench::testing::toy_model(2);
  lm::HashingEmbedder emb(128);
  const auto sample = evadebench::testing::make_sample("s", "The cat sat on the mat.");
  AttackOutcome o;
  o.sample_id = "s";
  o.attack_id = "identity";
  o.attacked_text = sample.text;
  const auto r = quality_report(sample, o, toy, emb);
  EXPECT_EQ(r.ppl_delta(), 0.0);
  EXPECT_EQ(r.fre_delta(), 0.0);
  EXPECT_DOUBLE_EQ(r.rouge_l, 1.0);
  EXPECT_NEAR(r.cs, 1.0, 1e-12);
  o.attacked_text = "The dog sat on the log.";
  const auto r2 = quality_report(sample, o, toy, emb);
  EXPECT_LT(r2.rouge_l, 1.0);
  const auto back = quality_from_json(to_json(r2));
  EXPECT_EQ(back.ppl_after, r2.ppl_after);
  EXPECT_EQ(back.attack_id, "identity");
}

TEST(QualityAggregate, MeansOfFieldsAndAbsoluteDeltas) {
  QualityReport a{"1", "x", 10, 12, 0.9, 0.8, 50, 40};
  QualityReport b{"2", "x", 10, 6, 0.7, 0.6, 50, 70};
  const std::vector<QualityReport> v = {a, b};
  const auto g = aggregate(v);
  EXPECT_EQ(g.n, 2u);
  EXPECT_DOUBLE_EQ(g.ppl_delta, (2.0 - 4.0) / 2);
  EXPECT_DOUBLE_EQ(g.abs_ppl_delta, 3.0);
  EXPECT_DOUBLE_EQ(g.abs_fre_delta, 15.0);
  EXPECT_DOUBLE_EQ(g.cs, 0.8);
  EXPECT_THROW(aggregate(std::span<const QualityReport>{}), InputError);
}
