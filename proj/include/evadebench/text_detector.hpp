#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evadebench/detectors.hpp"
#include "evadebench/logistic.hpp"
#include "evadebench/lm.hpp"

namespace evadebench::detectors {

// Anything that maps a text to one scalar with a declared direction. This is
// what evaluation ranks and what RAFT / HMGC use as a proxy.
class TextDetector {
 public:
  virtual ~TextDetector() = default;
  virtual std::string id() const = 0;
  virtual Direction direction() const = 0;
  virtual double score(std::string_view text) const = 0;

  // score() oriented so that larger means "more machine-like".
  double mgt_score(std::string_view text) const { return mgt_oriented(score(text), direction()); }
};

// Backends the metric detectors draw on. Only `scoring` is mandatory;
// fast_detect_gpt and binoculars fall back to it when their pair is unset.
struct MetricBackends {
  const lm::LanguageModel* scoring = nullptr;
  const lm::LanguageModel* fast_reference = nullptr;
  const lm::LanguageModel* binoculars_observer = nullptr;
  const lm::LanguageModel* binoculars_performer = nullptr;
};

// Raw detector output for any metric detector name (1 value, or 4 for gltr).
std::vector<double> metric_features(std::string_view detector_id, const MetricBackends& backends,
                                    std::string_view text);

// Scalar metric detector used directly (threshold-free).
class MetricDetector final : public TextDetector {
 public:
  MetricDetector(std::string detector_id, MetricBackends backends);
  std::string id() const override { return id_; }
  Direction direction() const override { return direction_; }
  double score(std::string_view text) const override;

 private:
  std::string id_;
  Direction direction_;
  MetricBackends backends_;
};

// Metric features fed through a trained logistic head; scores are
// P(machine), higher_is_mgt. This is how gltr is evaluated, and how any
// metric detector is retrained in the adversarial-training scenario.
class MetricClassifierDetector final : public TextDetector {
 public:
  MetricClassifierDetector(std::string detector_id, MetricBackends backends, LogisticClassifier head);
  std::string id() const override { return id_; }
  Direction direction() const override { return Direction::higher_is_mgt; }
  double score(std::string_view text) const override;
  const LogisticClassifier& head() const { return head_; }

 private:
  std::string id_;
  MetricBackends backends_;
  LogisticClassifier head_;
};

MetricClassifierDetector train_metric_classifier(std::string detector_id, MetricBackends backends,
                                                 std::span<const std::string> human_texts,
                                                 std::span<const std::string> machine_texts,
                                                 const LogisticOptions& options = {});

// Plain function adapter, mostly for tests and synthetic proxies.
class FunctionDetector final : public TextDetector {
 public:
  using Fn = std::function<double(std::string_view)>;
  FunctionDetector(std::string id, Direction direction, Fn fn)
      : id_(std::move(id)), direction_(direction), fn_(std::move(fn)) {}
  std::string id() const override { return id_; }
  Direction direction() const override { return direction_; }
  double score(std::string_view text) const override { return fn_(text); }

 private:
  std::string id_;
  Direction direction_;
  Fn fn_;
};

}  // namespace evadebench::detectors
