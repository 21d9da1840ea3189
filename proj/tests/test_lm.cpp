#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "evadebench/errors.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/reference.hpp"
#include "evadebench/text.hpp"
#include "support.hpp"

using namespace evadebench;
using evadebench::testing::toy_model;

TEST(ScorePosition, RankCountsStrictlyHigherEntries) {
  lm::PositionDistribution pos;
  pos.token = "b";
  pos.dist.entries = {{"a", std::log(0.4)}, {"b", std::log(0.3)}, {"c", std::log(0.3)}};
  pos.logprob = std::log(0.3);
  auto ts = lm::score_position(pos);
  EXPECT_EQ(ts.rank, 2);
  pos.token = "c";
  EXPECT_EQ(lm::score_position(pos).rank, 2);
  pos.token = "a";
  pos.logprob = std::log(0.4);
  EXPECT_EQ(lm::score_position(pos).rank, 1);
  const double h = -(0.4 * std::log(0.4) + 2 * 0.3 * std::log(0.3));
  EXPECT_NEAR(ts.entropy, h, 1e-12);
}

TEST(ScorePosition, FlatDistributionIsRankOne) {
  lm::UniformModel m({"x", "y", "z"});
  for (const auto& t : m.score_text("x y z x").tokens) {
    EXPECT_EQ(t.rank, 1);
    EXPECT_NEAR(t.logprob, -std::log(3.0), 1e-15);
  }
}

TEST(ScorePosition, TruncatedMissIsInexact) {
  lm::PositionDistribution pos;
  pos.token = "zz";
  pos.logprob = std::log(0.01);
  pos.dist.entries = {{"a", std::log(0.5)}, {"b", std::log(0.3)}};
  pos.dist.truncated = true;
  pos.dist.tail_mass = 0.2;
  const auto ts = lm::score_position(pos);
  EXPECT_EQ(ts.rank, 3);
  EXPECT_FALSE(ts.rank_exact);
}

TEST(Ngram, AddOneMatchesHandCounts) {
  const std::vector<std::string> texts = {"a b a c", "b a b"};
  lm::NgramOptions o;
  o.order = 2;
  o.add_unk = false;
  const auto m = lm::NgramModel::train_texts(texts, o);
  // Counts by hand: contexts <s>:{a:1,b:1}, a:{b:2,c:1}, b:{a:2}, c:{}
  const double V = 3;
  const std::vector<std::string> a = {"a"}, b = {"b"}, c = {"c"}, none;
  EXPECT_DOUBLE_EQ(m.probability(none, "a"), (1 + 1) / (2 + V));
  EXPECT_DOUBLE_EQ(m.probability(a, "b"), (2 + 1) / (3 + V));
  EXPECT_DOUBLE_EQ(m.probability(a, "a"), (0 + 1) / (3 + V));
  EXPECT_DOUBLE_EQ(m.probability(b, "a"), (2 + 1) / (2 + V));
  EXPECT_DOUBLE_EQ(m.probability(c, "a"), 1 / V);
  EXPECT_THROW(m.probability(a, "zz"), BackendError);
}

TEST(Ngram, DistributionsAreNormalisedAndCanonical) {
  const auto m = toy_model(3);
  for (const auto& prefix : {"", "the", "the cat", "unseen words here"}) {
    const auto d = m.next_token_distribution(prefix);
    double mass = 0.0;
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
      mass += std::exp(d.entries[i].logprob);
      if (i > 0) EXPECT_GE(d.entries[i - 1].logprob, d.entries[i].logprob);
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_EQ(d.entries.size(), m.vocab_size());
  }
}

TEST(Ngram, UnknownTokensMapToUnk) {
  const auto m = toy_model();
  const auto st = m.score_text("the zebra sat");
  ASSERT_EQ(st.size(), 3u);
  const std::vector<std::string> h = {"the"};
  EXPECT_NEAR(st.tokens[1].logprob, std::log(m.probability(h, "<unk>")), 1e-12);
}

TEST(Ngram, SerializationRoundTripIsExact) {
  const auto m = toy_model(3);
  const auto s = m.serialize();
  const auto back = lm::NgramModel::deserialize(s);
  EXPECT_TRUE(back == m);
  EXPECT_EQ(back.serialize(), s);
  EXPECT_EQ(toy_model(3).serialize(), s);
  EXPECT_EQ(back.descriptor().vocab_fingerprint, m.descriptor().vocab_fingerprint);
  EXPECT_THROW(lm::NgramModel::deserialize("{\"format\":\"other\"}"), InputError);
}

TEST(Ngram, SamplingIsSeededAndInVocabulary) {
  const auto m = toy_model(2);
  Rng a(3), b(3);
  const auto x = m.sample({}, 50, a);
  EXPECT_EQ(x, m.sample({}, 50, b));
  const std::set<std::string> vocab(m.vocabulary().begin(), m.vocabulary().end());
  for (const auto& t : x) EXPECT_TRUE(vocab.count(t));
}

TEST(Ngram, RejectsBadOptions) {
  lm::NgramOptions o;
  o.order = 4;
  const std::vector<std::string> t = {"a"};
  EXPECT_THROW(lm::NgramModel::train_texts(t, o), InputError);
  o.order = 2;
  const std::vector<std::string> empty = {"  "};
  EXPECT_THROW(lm::NgramModel::train_texts(empty, o), InputError);
}

// Entropy and perplexity of score_text must agree with the model's own
// next-token distributions, computed here directly from probability().
TEST(Ngram, ScoreTextConsistentWithDistributions) {
  const auto m = toy_model(3);
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> toks;
    const auto n = 1 + rng.below(15);
    for (std::uint64_t i = 0; i < n; ++i) toks.push_back(m.vocabulary()[rng.below(m.vocab_size())]);
    const auto text = text::detokenize(toks);
    const auto st = m.score_text(text);
    const auto words = text::token_strings(text);
    ASSERT_EQ(st.size(), words.size());
    double sum_lp = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::span<const std::string> hist(words.data(), i);
      double h = 0.0;
      for (const auto& v : m.vocabulary()) {
        const double p = m.probability(hist, v);
        h -= p * std::log(p);
      }
      EXPECT_NEAR(st.tokens[i].entropy, h, 1e-9);
      EXPECT_NEAR(st.tokens[i].logprob, std::log(m.probability(hist, words[i])), 1e-12);
      sum_lp += st.tokens[i].logprob;
    }
    (void)sum_lp;
  }
}

TEST(Deterministic, GreedyTextHasProbabilityOne) {
  lm::DeterministicModel m({"a", "b", "c"});
  const auto text = text::detokenize(m.greedy(7));
  for (const auto& t : m.score_text(text).tokens) {
    EXPECT_EQ(t.logprob, 0.0);
    EXPECT_EQ(t.rank, 1);
    EXPECT_EQ(t.entropy, 0.0);
  }
  EXPECT_THROW(m.score_text("a c"), BackendError);
}

TEST(Rewriters, LexiconIsPureInTextAndSeed) {
  lm::LexiconRewriter r({{"cat", {"feline", "kitty"}}, {"sat", {"rested"}}}, 1.0);
  lm::RewriteRequest req;
  req.text = "The cat sat.  Cat!";
  req.seed = 4;
  const auto out = r.rewrite(req);
  EXPECT_EQ(out, r.rewrite(req));
  EXPECT_NE(out.find("rested."), std::string::npos);
  EXPECT_EQ(text::split_sentences(out).separators, text::split_sentences(req.text).separators);
  EXPECT_TRUE(std::isupper(static_cast<unsigned char>(out[out.rfind(' ') + 1])));
  lm::LexiconRewriter none({{"cat", {"dog"}}}, 0.0);
  EXPECT_EQ(none.rewrite(req), req.text);
}

TEST(Rewriters, EchoReturnsRenderedPrompt) {
  lm::EchoRewriter r;
  lm::RewriteRequest req;
  req.text = "hello";
  EXPECT_EQ(r.rewrite(req), req.rendered_prompt());
  req.instruction = "custom hello";
  EXPECT_EQ(r.rewrite(req), "custom hello");
}

TEST(Embedder, HashingCountsBuckets) {
  lm::HashingEmbedder e(16);
  const auto v = e.embed("a a b");
  ASSERT_EQ(v.size(), 16u);
  double total = 0.0;
  for (double x : v) total += x;
  EXPECT_GT(total, 0.0);
  EXPECT_EQ(e.embed("a a b"), v);
}

TEST(Counters, BackendCallsAreCounted) {
  const auto m = toy_model();
  const auto before = lm::backend_calls();
  const auto before_thread = lm::thread_backend_calls();
  m.score_text("the cat");
  m.next_token_distribution("the");
  EXPECT_EQ(lm::backend_calls() - before, 2u);
  EXPECT_EQ(lm::thread_backend_calls() - before_thread, 2u);
}

TEST(SampleToken, InverseCdfOverEntries) {
  lm::TokenDistribution d;
  d.entries = {{"a", std::log(0.5)}, {"b", std::log(0.25)}, {"c", std::log(0.25)}};
  EXPECT_EQ(lm::sample_token(d, 0.0), "a");
  EXPECT_EQ(lm::sample_token(d, 0.49), "a");
  EXPECT_EQ(lm::sample_token(d, 0.51), "b");
  EXPECT_EQ(lm::sample_token(d, 0.99), "c");
}
