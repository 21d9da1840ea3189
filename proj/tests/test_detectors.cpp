#include <gtest/gtest.h>

#include <cmath>

#include "evadebench/detectors.hpp"
#include "evadebench/errors.hpp"
#include "evadebench/evaluation.hpp"
#include "evadebench/reference.hpp"
#include "evadebench/text.hpp"
#include "evadebench/text_detector.hpp"
#include "support.hpp"

using namespace evadebench;
using namespace evadebench::detectors;
using evadebench::testing::toy_model;

namespace {

lm::ScoredText scored(std::vector<std::pair<double, std::int64_t>> lp_rank, double entropy = 0.0) {
  lm::ScoredText st;
  for (auto [lp, r] : lp_rank) st.tokens.push_back({"t", lp, r, entropy, true});
  return st;
}

}  // namespace

TEST(Metrics, HandComputedStatistics) {
  const auto st = scored({{std::log(0.5), 1}, {std::log(0.25), 3}, {std::log(0.125), 12}}, 0.7);
  const double mean_lp = (std::log(0.5) + std::log(0.25) + std::log(0.125)) / 3;
  const double mean_lr = (0 + std::log(3.0) + std::log(12.0)) / 3;
  EXPECT_NEAR(log_likelihood(st).scalar(), mean_lp, 1e-15);
  EXPECT_NEAR(rank(st).scalar(), 16.0 / 3, 1e-15);
  EXPECT_NEAR(log_rank(st).scalar(), mean_lr, 1e-15);
  EXPECT_NEAR(entropy(st).scalar(), 0.7, 1e-15);
  EXPECT_NEAR(lrr(st).scalar(), std::abs(mean_lp) / mean_lr, 1e-15);
  const auto g = gltr_features(st);
  EXPECT_EQ(g.value, (std::vector<double>{2.0 / 3, 1.0 / 3, 0.0, 0.0}));
  EXPECT_THROW(g.scalar(), InputError);
}

TEST(Metrics, GltrBucketEdges) {
  const auto st = scored({{-1, 10}, {-1, 11}, {-1, 100}, {-1, 101}, {-1, 1000}, {-1, 1001}});
  EXPECT_EQ(gltr_features(st).value, (std::vector<double>{1.0 / 6, 2.0 / 6, 2.0 / 6, 1.0 / 6}));
  auto inexact = scored({{-1, 11}});
  inexact.tokens[0].rank_exact = false;
  EXPECT_THROW(gltr_features(inexact), InputError);
  inexact.tokens[0].rank = 1001;
  EXPECT_NO_THROW(gltr_features(inexact));
}

TEST(Metrics, DegenerateAndEmptyInputs) {
  EXPECT_THROW(lrr(scored({{-0.1, 1}, {-0.2, 1}})), DegenerateError);
  EXPECT_THROW(log_likelihood(lm::ScoredText{}), InputError);
  EXPECT_THROW(score_by_name("binoculars", scored({{-1, 1}})), InputError);
}

TEST(Metrics, Directions) {
  EXPECT_EQ(direction_of("log_likelihood"), Direction::higher_is_mgt);
  EXPECT_EQ(direction_of("rank"), Direction::lower_is_mgt);
  EXPECT_EQ(direction_of("binoculars"), Direction::lower_is_mgt);
  EXPECT_EQ(direction_of("gltr"), Direction::feature_vector);
  EXPECT_THROW(direction_of("nope"), InputError);
  EXPECT_EQ(mgt_oriented(2.0, Direction::lower_is_mgt), -2.0);
  EXPECT_EQ(parse_direction(to_string(Direction::lower_is_mgt)), Direction::lower_is_mgt);
}

TEST(FastDetectGpt, MomentsByHand) {
  lm::TokenDistribution scoring, reference;
  scoring.entries = {{"a", std::log(0.5)}, {"b", std::log(0.5)}};
  reference.entries = {{"a", std::log(0.75)}, {"b", std::log(0.25)}};
  const auto m = sampling_moments(scoring, reference);
  EXPECT_NEAR(m.mean, std::log(0.5), 1e-15);
  EXPECT_NEAR(m.variance, 0.0, 1e-15);
  scoring.entries = {{"a", std::log(0.8)}, {"b", std::log(0.2)}};
  const auto m2 = sampling_moments(scoring, reference);
  const double mu = 0.75 * std::log(0.8) + 0.25 * std::log(0.2);
  EXPECT_NEAR(m2.mean, mu, 1e-15);
  EXPECT_NEAR(m2.variance, 0.75 * std::pow(std::log(0.8) - mu, 2) + 0.25 * std::pow(std::log(0.2) - mu, 2), 1e-12);
}

TEST(FastDetectGpt, AnalyticMatchesMonteCarlo) {
  const auto scoring = toy_model(3);
  const auto reference = toy_model(2);
  const auto sp = scoring.position_distributions("the cat sat on the mat and the dog saw a cat");
  const auto rp = reference.position_distributions("the cat sat on the mat and the dog saw a cat");
  Rng rng(1);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto m = sampling_moments(sp[i].dist, rp[i].dist);
    const int draws = 100000;
    double sum = 0.0;
    for (int k = 0; k < draws; ++k) sum += *sp[i].dist.logprob_of(lm::sample_token(rp[i].dist, rng.uniform()));
    const double se = std::sqrt(m.variance / draws);
    EXPECT_LE(std::abs(sum / draws - m.mean), 3 * se + 1e-9) << "position " << i;
  }
}

TEST(FastDetectGpt, DegenerateWhenScoringIsFlat) {
  lm::UniformModel flat({"the", "cat", "sat"});
  EXPECT_THROW(fast_detect_gpt(flat, flat, "the cat sat"), DegenerateError);
}

TEST(Binoculars, MatchesDirectFormula) {
  const auto observer = toy_model(3);
  const auto performer = toy_model(2);
  const std::string text = "the cat saw a dog on the log";
  const auto words = text::token_strings(text);
  double nll = 0.0, xent = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::span<const std::string> h(words.data(), i);
    nll -= std::log(observer.probability(h, words[i]));
    for (const auto& v : performer.vocabulary()) xent -= performer.probability(h, v) * std::log(observer.probability(h, v));
  }
  const double n = static_cast<double>(words.size());
  EXPECT_NEAR(binoculars(observer, performer, text).scalar(), std::exp(nll / n) / std::exp(xent / n), 1e-9);
  EXPECT_NEAR(binoculars(observer, observer, text).scalar(),
              std::exp(nll / n) / std::exp([&] {
                double x = 0.0;
                for (std::size_t i = 0; i < words.size(); ++i) {
                  const std::span<const std::string> h(words.data(), i);
                  for (const auto& v : observer.vocabulary()) {
                    const double p = observer.probability(h, v);
                    x -= p * std::log(p);
                  }
                }
                return x / n;
              }()),
              1e-9);
}

TEST(TextDetectors, MetricDetectorDispatch) {
  const auto m = toy_model(2);
  MetricBackends b{&m, nullptr, nullptr, nullptr};
  MetricDetector ll("log_likelihood", b);
  EXPECT_NEAR(ll.score("the cat"), log_likelihood(m.score_text("the cat")).scalar(), 1e-15);
  EXPECT_EQ(metric_features("gltr", b, "the cat").size(), 4u);
  MetricDetector bino("binoculars", b);
  EXPECT_NEAR(bino.score("the cat sat"), binoculars(m, m, "the cat sat").scalar(), 1e-15);
  EXPECT_THROW(MetricDetector("gltr", b), InputError);
  EXPECT_THROW(MetricDetector("log_likelihood", MetricBackends{}), InputError);
}

TEST(TextDetectors, GltrClassifierSeparatesSynthetic) {
  const auto& bundle = evadebench::testing::shared_synthetic();
  MetricBackends b{&bundle.model, &bundle.companion, &bundle.model, &bundle.companion};
  std::vector<std::string> h_train, m_train, h_test, m_test;
  for (const auto& s : bundle.corpus) {
    auto& train = s.label == Label::human ? h_train : m_train;
    auto& test = s.label == Label::human ? h_test : m_test;
    (train.size() < 100 ? train : test).push_back(s.text);
  }
  const auto clf = train_metric_classifier("gltr", b, h_train, m_train);
  std::vector<double> pos, neg;
  for (const auto& t : m_test) pos.push_back(clf.score(t));
  for (const auto& t : h_test) neg.push_back(clf.score(t));
  EXPECT_GE(evaluation::compute_auc(pos, neg), 0.55);
  for (double p : pos) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}
