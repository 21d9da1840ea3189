#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/attacks.hpp"
#include "evadebench/corpus.hpp"
#include "evadebench/detectors.hpp"
#include "evadebench/logistic.hpp"
#include "evadebench/model_detectors.hpp"
#include "evadebench/text_detector.hpp"

namespace evadebench::evaluation {

using detectors::Direction;

// P(random positive outranks random negative) under `direction`, ties
// counting one half. Average-rank Mann-Whitney, O(n log n).
double compute_auc(std::span<const double> pos, std::span<const double> neg,
                   Direction direction = Direction::higher_is_mgt);

struct ThresholdMetrics {
  double threshold = 0.0;  // on the mgt-oriented score; predict machine when score >= threshold
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Metrics of the rule "machine iff oriented score >= threshold".
ThresholdMetrics metrics_at(std::span<const double> pos, std::span<const double> neg, double threshold,
                            Direction direction = Direction::higher_is_mgt);

// Threshold maximising F1 on (training) scores. Candidates are the distinct
// oriented scores; ties go to the lower threshold.
double optimal_f1_threshold(std::span<const double> pos, std::span<const double> neg,
                            Direction direction = Direction::higher_is_mgt);

struct CellKey {
  std::string dataset;
  std::string generator = "all";
  std::string detector_id;
  std::string attack_id = "clean";
  std::string train_attack_id;  // scenario cells only
  std::string class_name;       // attribution cells: class or "macro"

  bool operator==(const CellKey&) const = default;
};

struct EvalReport {
  CellKey key;
  double auc = 0.0;
  ThresholdMetrics metrics;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_cells = 1;  // > 1 after aggregation
  bool failed = false;
  std::string error;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_from_json(const nlohmann::json& j);
std::string csv_header();
std::string to_csv_row(const EvalReport& r);

// Scores are raw detector outputs; `threshold` is on the oriented scale.
EvalReport evaluate_scores(CellKey key, std::span<const double> pos, std::span<const double> neg, Direction direction,
                           double threshold);

// Fits the optimal-F1 threshold of `detector` on training texts.
double fit_threshold(const detectors::TextDetector& detector, std::span<const std::string> human_train,
                     std::span<const std::string> machine_train);

// Positives are the machine (or attacked) texts, negatives the untouched
// human texts. A scoring failure marks the cell failed instead of throwing.
EvalReport evaluate_binary(const detectors::TextDetector& detector, std::span<const std::string> human_test,
                           std::span<const std::string> positives, CellKey key, double threshold);

// One-vs-rest AUC per class on class_scores plus their macro mean (last
// entry). Throws InputError when a detector class is absent from `test` or
// a test sample belongs to no detector class.
std::vector<EvalReport> evaluate_attribution(const detectors::HeadDetector& detector, const Corpus& test,
                                             const std::string& dataset = {});

// group_by names among dataset, generator, detector, attack, train_attack,
// class. Other key fields become "*". Means are unweighted; a group with a
// failed cell is reported failed.
std::vector<EvalReport> aggregate(std::span<const EvalReport> cells, std::span<const std::string> group_by);

struct ScenarioSpec {
  std::string detector_id;
  std::string train_attack_id;
  std::vector<std::string> test_attack_ids;
  std::string dataset;
  std::uint64_t seed = 0;
};

using AttackFactory = std::function<std::unique_ptr<attacks::Attack>(const std::string& name)>;

// What a scenario needs to retrain and evaluate a detector. The detector id
// is a metric detector name (retrained through a logistic head) or "lm_d"
// (embedding head, needs `embedder`).
struct ScenarioEnvironment {
  const Corpus* corpus = nullptr;  // splits assigned
  detectors::MetricBackends backends;
  const lm::Embedder* embedder = nullptr;
  AttackFactory attacks;
  std::vector<std::string> registered;  // names the factory accepts
  LogisticOptions logistic;
  std::size_t threads = 1;
  // Optional memo of attacked texts (attack -> sample id -> text) shared by
  // scenarios that use the same deterministic attacks.
  std::map<std::string, std::map<std::string, std::string>>* memo = nullptr;
};

struct ScenarioResult {
  std::vector<EvalReport> cells;  // one per test attack, in spec order
  std::size_t n_augmented = 0;    // attacked training texts added
};

// Retrains the detector on the train split augmented with attack-A versions
// of its machine texts (exact duplicates are not added again) and evaluates
// it against every test attack applied to the test split's machine texts.
ScenarioResult run_scenario(const ScenarioSpec& spec, const ScenarioEnvironment& env);

}  // namespace evadebench::evaluation
