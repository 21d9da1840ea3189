#include "evadebench/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "evadebench/errors.hpp"

namespace evadebench {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LossAndGradient logistic_objective(std::span<const double> params, const std::vector<std::vector<double>>& rows,
                                   std::span<const int> labels, double l2) {
  const std::size_t d = params.size() - 1;
  const double n = static_cast<double>(rows.size());
  LossAndGradient out;
  out.gradient.assign(d + 1, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z = params[d];
    for (std::size_t k = 0; k < d; ++k) z += params[k] * rows[i][k];
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    out.loss += softplus(-s * z);
    // d/dz log(1 + exp(-s z)) = -s * sigmoid(-s z)
    const double g = -s * sigmoid(-s * z);
    for (std::size_t k = 0; k < d; ++k) out.gradient[k] += g * rows[i][k];
    out.gradient[d] += g;
  }
  out.loss /= n;
  for (auto& g : out.gradient) g /= n;
  for (std::size_t k = 0; k < d; ++k) {
    out.loss += 0.5 * l2 * params[k] * params[k];
    out.gradient[k] += l2 * params[k];
  }
  return out;
}

double LogisticClassifier::predict(std::span<const double> x) const {
  if (x.size() != weights.size()) throw InputError("feature vector has the wrong dimension");
  double z = bias;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double mean = feature_mean.empty() ? 0.0 : feature_mean[k];
    const double scale = feature_scale.empty() ? 1.0 : feature_scale[k];
    z += weights[k] * (x[k] - mean) / scale;
  }
  return sigmoid(z);
}

double classify(const LogisticClassifier& clf, std::span<const double> x) { return clf.predict(x); }

LogisticClassifier train_classifier(std::span<const LabeledFeatures> data, std::vector<std::string> feature_spec,
                                    const LogisticOptions& options) {
  if (data.size() < 2) throw InputError("logistic regression needs at least 2 samples");
  const std::size_t d = data[0].x.size();
  if (d == 0) throw InputError("logistic regression needs at least one feature");
  if (!feature_spec.empty() && feature_spec.size() != d) throw InputError("feature_spec size does not match features");
  bool has0 = false, has1 = false;
  for (const auto& row : data) {
    if (row.x.size() != d) throw InputError("ragged feature vectors");
    if (row.label != 0 && row.label != 1) throw InputError("labels must be 0 or 1");
    (row.label == 1 ? has1 : has0) = true;
    for (double v : row.x) {
      if (!std::isfinite(v)) throw InputError("non-finite feature value");
    }
  }
  if (!has0 || !has1) throw InputError("logistic regression needs both classes");

  LogisticClassifier clf;
  if (feature_spec.empty()) {
    for (std::size_t k = 0; k < d; ++k) feature_spec.push_back("f" + std::to_string(k));
  }
  clf.feature_spec = std::move(feature_spec);
  clf.feature_mean.assign(d, 0.0);
  clf.feature_scale.assign(d, 1.0);
  const double n = static_cast<double>(data.size());
  if (options.standardize) {
    for (const auto& row : data) {
      for (std::size_t k = 0; k < d; ++k) clf.feature_mean[k] += row.x[k] / n;
    }
    for (std::size_t k = 0; k < d; ++k) {
      double var = 0.0;
      for (const auto& row : data) var += (row.x[k] - clf.feature_mean[k]) * (row.x[k] - clf.feature_mean[k]) / n;
      const double sd = std::sqrt(var);
      clf.feature_scale[k] = sd > 1e-12 ? sd : 1.0;
    }
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(data.size());
  for (const auto& row : data) {
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) z[k] = (row.x[k] - clf.feature_mean[k]) / clf.feature_scale[k];
    rows.push_back(std::move(z));
    labels.push_back(row.label);
  }

  std::vector<double> params(d + 1, 0.0);
  auto current = logistic_objective(params, rows, labels, options.l2);
  clf.meta.seed = options.seed;
  clf.meta.loss_history.push_back(current.loss);
  double step = 1.0;
  int it = 0;
  for (; it < options.max_iters; ++it) {
    const double gnorm = inf_norm(current.gradient);
    if (gnorm < options.tolerance) {
      clf.meta.converged = true;
      break;
    }
    double g2 = 0.0;
    for (double g : current.gradient) g2 += g * g;
    step = std::min(step * 2.0, 64.0);
    bool accepted = false;
    while (step > 1e-12) {
      std::vector<double> trial(params);
      for (std::size_t k = 0; k <= d; ++k) trial[k] -= step * current.gradient[k];
      auto next = logistic_objective(trial, rows, labels, options.l2);
      if (next.loss <= current.loss - 0.5 * step * g2) {
        params = std::move(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    clf.meta.loss_history.push_back(current.loss);
  }
  clf.meta.iterations = it;
  clf.meta.final_loss = current.loss;
  clf.meta.gradient_norm = inf_norm(current.gradient);
  if (clf.meta.gradient_norm < options.tolerance) clf.meta.converged = true;
  clf.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  clf.bias = params[d];
  return clf;
}

}  // namespace evadebench
