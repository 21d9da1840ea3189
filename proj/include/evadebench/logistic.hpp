#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evadebench {

struct TrainingMeta {
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;  // infinity norm at exit
  bool converged = false;
  std::vector<double> loss_history;  // one entry per accepted iterate, starting at the initial point
};

// Binary logistic regression. Features are standardised with the training
// mean/scale before the linear layer; an untrained classifier has mean 0
// and scale 1, so hand-built weights act on raw features.
struct LogisticClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<std::string> feature_spec;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  TrainingMeta meta;

  // P(label = 1 | x).
  double predict(std::span<const double> x) const;
};

struct LabeledFeatures {
  std::vector<double> x;
  int label = 0;  // 0 or 1
};

struct LogisticOptions {
  std::uint64_t seed = 0;
  int max_iters = 500;
  double tolerance = 1e-6;
  double l2 = 1e-4;
  bool standardize = true;
};

// Full-batch gradient descent with Armijo backtracking on
//   mean_i log(1 + exp(-s_i z_i)) + l2/2 * |w|^2,  s_i = +-1.
// The bias is not regularised. Deterministic; the seed is only recorded.
// Throws InputError on fewer than 2 samples, a single class, ragged or
// non-finite features.
LogisticClassifier train_classifier(std::span<const LabeledFeatures> data, std::vector<std::string> feature_spec,
                                    const LogisticOptions& options = {});

double classify(const LogisticClassifier& clf, std::span<const double> x);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // weights first, bias last
};

// Objective on already-standardised rows; params = weights then bias.
LossAndGradient logistic_objective(std::span<const double> params, const std::vector<std::vector<double>>& rows,
                                   std::span<const int> labels, double l2);

double sigmoid(double z);

}  // namespace evadebench
