#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/qpa.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/reference.hpp"
#include "evadebench/text.hpp"
#include "support.hpp"

using namespace evadebench;
using namespace evadebench::qpa;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(QpaInstruction, MatchesFixtureByteForByte) {
  const auto fixture = read_file(std::string(EVADEBENCH_TEST_DATA) + "/qpa_instruction.txt");
  ASSERT_FALSE(fixture.empty());
  EXPECT_EQ(instruction_block(), fixture);
}

TEST(QpaInstruction, AugmentAppendsOnNewLine) {
  EXPECT_EQ(qpa_prompt_augment("Rewrite this."), "Rewrite this.\n" + instruction_block());
  EXPECT_EQ(qpa_prompt_augment("Rewrite this.\n"), "Rewrite this.\n" + instruction_block());
  EXPECT_EQ(qpa_prompt_augment(""), instruction_block());
}

TEST(QpaConstraints, DefaultsValidationAndJson) {
  const QpaConstraints c;
  EXPECT_EQ(c.max_ppl_rel_change, 0.05);
  EXPECT_EQ(c.max_fre_rel_change, 0.05);
  EXPECT_EQ(c.min_similarity_word, 0.95);
  EXPECT_EQ(c.min_similarity_token, 0.70);
  EXPECT_NO_THROW(validate(c));
  QpaConstraints bad;
  bad.max_ppl_rel_change = 0.0;
  EXPECT_THROW(validate(bad), InputError);
  bad = {};
  bad.min_similarity_word = 1.5;
  EXPECT_THROW(validate(bad), InputError);
  QpaConstraints open{INFINITY, INFINITY, 0.0, 0.0};
  EXPECT_NO_THROW(validate(open));
  const auto back = constraints_from_json(to_json(open));
  EXPECT_TRUE(std::isinf(back.max_ppl_rel_change));
}

TEST(QpaConstraints, RelativeChange) {
  EXPECT_DOUBLE_EQ(relative_change(100, 104), 0.04);
  EXPECT_DOUBLE_EQ(relative_change(-50, -40), 0.2);
  EXPECT_DOUBLE_EQ(relative_change(0.5, 0.7), 0.2);
}

TEST(QpaWordFilter, EveryAcceptedCandidateSatisfiesConstraints) {
  const auto& b = evadebench::testing::shared_synthetic();
  lm::HashingEmbedder emb(1024);
  const QualityBackends backends{&b.model, &emb};
  const QpaConstraints c;
  int accepted = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto split = text::split_sentences(b.corpus[i].text);
    const auto& sentence = split.sentences[0];
    const auto toks = text::tokenize(sentence);
    std::vector<std::string> candidates;
    for (const auto& t : toks) {
      if (!t.is_word) continue;
      for (const auto& alt : b.lexicon.at(t.text)) candidates.push_back(text::replace_token(sentence, t, alt));
    }
    const auto d = qpa_filter_word_candidates(sentence, candidates, c, backends);
    ASSERT_EQ(d.checks.size(), candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto& chk = d.checks[k];
      const bool ok = relative_change(quality::perplexity(b.model, sentence), quality::perplexity(b.model, candidates[k])) < 0.05 &&
                      relative_change(quality::flesch_reading_ease(sentence), quality::flesch_reading_ease(candidates[k])) < 0.05 &&
                      quality::cosine_similarity(emb, sentence, candidates[k]) > 0.95;
      EXPECT_EQ(chk.passed, ok);
      accepted += ok;
    }
    if (d.chosen) EXPECT_TRUE(d.checks[*d.chosen].passed);
  }
  EXPECT_GT(accepted, 0);
}

TEST(QpaWordFilter, ObjectivePicksArgminWithEarlyTies) {
  lm::UniformModel m({"a", "b", "c", "."});
  lm::HashingEmbedder emb(64);
  const QpaConstraints open{INFINITY, INFINITY, 0.0, 0.0};
  const std::vector<std::string> cands = {"a b c.", "a a c.", "b b c."};
  const std::vector<double> obj = {3.0, 1.0, 1.0};
  const auto d = qpa_filter_word_candidates("a b c.", cands, open, {&m, &emb},
                                            [&](std::size_t i) { return obj[i]; });
  ASSERT_TRUE(d.chosen);
  EXPECT_EQ(*d.chosen, 1u);
  const auto first = qpa_filter_word_candidates("a b c.", cands, open, {&m, &emb});
  EXPECT_EQ(*first.chosen, 0u);
}

TEST(QpaTokenSelect, ArgminPerplexityDifferenceAndFallback) {
  const auto toy = evadebench::testing::toy_model(2);
  lm::HashingEmbedder emb(256);
  const QpaConstraints c;
  const std::vector<std::string> so_far = {"the", "cat"};
  const std::vector<TokenCandidate> cands = {{"m1", "sat"}, {"m2", "dog"}, {"m3", "mat"}};
  const std::string original = "the cat sat";
  const auto d = qpa_select_token(so_far, original, cands, c, {&toy, &emb}, 2);
  const double target = quality::perplexity(toy, original);
  EXPECT_DOUBLE_EQ(d.original_ppl, target);
  std::optional<std::size_t> best;
  double best_diff = INFINITY;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string cand = "the cat " + cands[i].token;
    const double sim = quality::cosine_similarity(emb, cand, original);
    EXPECT_EQ(d.checks[i].passed, sim > 0.7);
    const double diff = std::abs(quality::perplexity(toy, cand) - target);
    if (sim > 0.7 && diff < best_diff) {
      best_diff = diff;
      best = i;
    }
  }
  ASSERT_TRUE(best);
  EXPECT_FALSE(d.fallback);
  EXPECT_EQ(d.chosen, *best);

  QpaConstraints strict = c;
  strict.min_similarity_token = 1.0;
  const std::vector<std::string> empty;
  const auto f = qpa_select_token(empty, "zzz yyy", cands, strict, {&toy, &emb}, 2);
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.chosen, 2u);
}
