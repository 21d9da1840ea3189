#include <gtest/gtest.h>

#include <cmath>

#include "evadebench/errors.hpp"
#include "evadebench/logistic.hpp"
#include "evadebench/random.hpp"

using namespace evadebench;

namespace {

double direct_loss(const std::vector<double>& params, const std::vector<std::vector<double>>& rows,
                   const std::vector<int>& labels, double l2) {
  const std::size_t d = params.size() - 1;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z = params[d];
    for (std::size_t k = 0; k < d; ++k) z += params[k] * rows[i][k];
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    loss += std::log1p(std::exp(-s * z));
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < d; ++k) reg += params[k] * params[k];
  return loss / static_cast<double>(rows.size()) + 0.5 * l2 * reg;
}

}  // namespace

TEST(Logistic, ObjectiveMatchesDirectFormula) {
  Rng rng(2);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({rng.uniform() - 0.5, rng.uniform() * 2, -rng.uniform()});
    labels.push_back(static_cast<int>(rng.below(2)));
  }
  const std::vector<double> params = {0.3, -0.7, 1.1, 0.2};
  EXPECT_NEAR(logistic_objective(params, rows, labels, 0.01).loss, direct_loss(params, rows, labels, 0.01), 1e-12);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> r(5);
      for (auto& x : r) x = 4 * rng.uniform() - 2;
      rows.push_back(r);
      labels.push_back(static_cast<int>(rng.below(2)));
    }
    std::vector<double> p(6);
    for (auto& x : p) x = 2 * rng.uniform() - 1;
    const auto g = logistic_objective(p, rows, labels, 1e-3).gradient;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto hi = p, lo = p;
      hi[k] += 1e-5;
      lo[k] -= 1e-5;
      const double fd = (direct_loss(hi, rows, labels, 1e-3) - direct_loss(lo, rows, labels, 1e-3)) / 2e-5;
      EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Logistic, SeparatesLinearData) {
  Rng rng(3);
  std::vector<LabeledFeatures> data;
  for (int i = 0; i < 200; ++i) {
    const double x = 4 * rng.uniform() - 2, y = 4 * rng.uniform() - 2;
    data.push_back({{x, y}, x + 0.5 * y > 0 ? 1 : 0});
  }
  const auto clf = train_classifier(data, {"x", "y"});
  int correct = 0;
  for (const auto& d : data) correct += (classify(clf, d.x) >= 0.5) == (d.label == 1);
  EXPECT_GE(correct, 195);
  EXPECT_FALSE(clf.meta.loss_history.empty());
  for (std::size_t i = 1; i < clf.meta.loss_history.size(); ++i) {
    EXPECT_LE(clf.meta.loss_history[i], clf.meta.loss_history[i - 1] + 1e-15);
  }
  EXPECT_EQ(train_classifier(data, {"x", "y"}).weights, clf.weights);
}

TEST(Logistic, RejectsBadData) {
  std::vector<LabeledFeatures> one_class = {{{1.0}, 1}, {{2.0}, 1}};
  EXPECT_THROW(train_classifier(one_class, {"x"}), InputError);
  std::vector<LabeledFeatures> ragged = {{{1.0}, 1}, {{2.0, 3.0}, 0}};
  EXPECT_THROW(train_classifier(ragged, {"x"}), InputError);
  std::vector<LabeledFeatures> nan = {{{NAN}, 1}, {{2.0}, 0}};
  EXPECT_THROW(train_classifier(nan, {"x"}), InputError);
}

TEST(Logistic, SigmoidIsStable) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(800.0), 0.999);
  EXPECT_GE(sigmoid(-800.0), 0.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
}
