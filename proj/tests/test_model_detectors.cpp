#include <gtest/gtest.h>

#include "evadebench/errors.hpp"
#include "evadebench/evaluation.hpp"
#include "evadebench/model_detectors.hpp"
#include "evadebench/reference.hpp"
#include "support.hpp"

using namespace evadebench;
using namespace evadebench::detectors;
using evadebench::testing::make_sample;

namespace {

// Machine texts use one vocabulary, human texts another, so a bag-of-words
// head separates them perfectly.
Corpus vocabulary_corpus(const std::string& name, int n, const std::vector<std::string>& generators) {
  std::vector<TextSample> v;
  const std::vector<std::string> mwords = {"alpha", "beta", "gamma", "delta"};
  const std::vector<std::string> hwords = {"red", "green", "blue", "white"};
  Rng rng(4);
  for (int i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < generators.size(); ++g) {
      std::string t;
      for (int k = 0; k < 12; ++k) t += mwords[(g + rng.below(2)) % mwords.size()] + " ";
      auto s = make_sample(generators[g] + std::to_string(i), t, Label::machine, name);
      s.generator = generators[g];
      v.push_back(s);
    }
    std::string t;
    for (int k = 0; k < 12; ++k) t += hwords[rng.below(hwords.size())] + " ";
    v.push_back(make_sample("h" + std::to_string(i), t, Label::human, name));
  }
  return Corpus(name, v);
}

}  // namespace

TEST(HeadDetector, BinaryHeadSeparatesVocabularies) {
  lm::HashingEmbedder emb(64);
  const auto train = vocabulary_corpus("d", 30, {"g"});
  const auto det = train_head_detector(train, emb, {"human", "machine"}, 1);
  EXPECT_TRUE(det.is_binary());
  EXPECT_GT(det.score("alpha beta alpha"), 0.5);
  EXPECT_LT(det.score("red green blue"), 0.5);
  EXPECT_EQ(det.predict("alpha beta"), "machine");
  EXPECT_GE(det.report().train_accuracy, 0.99);
  const auto again = train_head_detector(train, emb, {"human", "machine"}, 1);
  EXPECT_EQ(again.heads()[0].weights, det.heads()[0].weights);
}

TEST(HeadDetector, AttributionAcrossGenerators) {
  lm::HashingEmbedder emb(64);
  const auto train = vocabulary_corpus("d", 30, {"g1", "g2"});
  const auto det = train_head_detector(train, emb, {"human", "g1", "g2"}, 2);
  EXPECT_FALSE(det.is_binary());
  EXPECT_EQ(det.class_scores("alpha beta").size(), 3u);
  EXPECT_EQ(det.predict("red blue white"), "human");
  const auto test = vocabulary_corpus("d", 10, {"g1", "g2"});
  const auto cells = evaluation::evaluate_attribution(det, test, "d");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells.back().key.class_name, "macro");
  for (const auto& c : cells) EXPECT_GE(c.auc, 0.9) << c.key.class_name;
  EXPECT_THROW(train_head_detector(train, emb, {"human", "g3"}, 2), InputError);
}

TEST(HeadDetector, ClassOf) {
  auto m = make_sample("a", "x");
  EXPECT_EQ(class_of(m, {"human", "machine"}), "machine");
  EXPECT_EQ(class_of(m, {"human", "gen"}), "gen");
  EXPECT_EQ(class_of(make_sample("b", "y", Label::human), {"human", "gen"}), "human");
}

TEST(Hmgc, RegimeFollowsTrainingCorpus) {
  lm::HashingEmbedder emb(32);
  const auto a = vocabulary_corpus("a", 10, {"g"});
  const auto b = vocabulary_corpus("b", 10, {"g"});
  const auto s = surrogate_for_hmgc(a, emb, 1);
  EXPECT_EQ(hmgc_regime(s, a), HmgcRegime::standard);
  EXPECT_EQ(hmgc_regime(s, b), HmgcRegime::mismatched);
  EXPECT_EQ(to_string(HmgcRegime::mismatched), "mismatched");
}
