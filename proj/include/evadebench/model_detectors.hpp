#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "evadebench/corpus.hpp"
#include "evadebench/logistic.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/remote.hpp"
#include "evadebench/text_detector.hpp"

namespace evadebench::detectors {

struct HeadTrainingReport {
  std::size_t n_fit = 0;
  std::size_t n_holdout = 0;
  double holdout_accuracy = 0.0;  // model fitted on the fit fold only
  double train_accuracy = 0.0;    // final model on all training samples
  std::map<std::string, double> per_class_train_accuracy;
};

// Frozen embeddings plus a trained logistic head: one binary head when the
// classes are {human, machine}, otherwise one-vs-rest heads over the
// classes (generator names, plus "human" if listed).
class HeadDetector final : public TextDetector {
 public:
  HeadDetector(const lm::Embedder& embedder, std::vector<std::string> classes, std::vector<LogisticClassifier> heads,
               std::string trained_on, HeadTrainingReport report);

  std::string id() const override { return "lm_d"; }
  Direction direction() const override { return Direction::higher_is_mgt; }
  // P(machine). Attribution detectors report 1 - P(human) when "human" is a
  // class and the top non-human class score otherwise.
  double score(std::string_view text) const override;

  bool is_binary() const { return heads_.size() == 1; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<LogisticClassifier>& heads() const { return heads_; }
  // One-vs-rest probability per class (binary: {P(human), P(machine)}).
  std::vector<double> class_scores(std::string_view text) const;
  std::string predict(std::string_view text) const;
  const std::string& trained_on() const { return trained_on_; }
  const HeadTrainingReport& report() const { return report_; }
  const lm::Embedder& embedder() const { return *embedder_; }

 private:
  const lm::Embedder* embedder_;
  std::vector<std::string> classes_;
  std::vector<LogisticClassifier> heads_;
  std::string trained_on_;
  HeadTrainingReport report_;
};

// Class of a sample for the given class list: "machine"/"human" in binary
// mode, the generator name (or "human") in attribution mode.
std::string class_of(const TextSample& s, const std::vector<std::string>& classes);

// Deterministic given seed. Throws InputError when a class has no sample.
HeadDetector train_head_detector(const Corpus& train, const lm::Embedder& embedder, std::vector<std::string> classes,
                                 std::uint64_t seed, const LogisticOptions& options = {});

// Binary head used as the HMGC surrogate; remembers which corpus it saw.
HeadDetector surrogate_for_hmgc(const Corpus& train, const lm::Embedder& embedder, std::uint64_t seed);

enum class HmgcRegime { standard, mismatched };
std::string to_string(HmgcRegime r);
HmgcRegime hmgc_regime(const HeadDetector& surrogate, const Corpus& attacked);

struct ExternalDetectorRef {
  std::string id;
  std::string endpoint;  // full URL, e.g. http://host:port/score
  Direction score_direction = Direction::higher_is_mgt;
};

// POST {"text": "..."} -> {"score": p}, p in [0, 1].
class ExternalDetector final : public TextDetector {
 public:
  // Sends a probe request; throws BackendError when the endpoint is down.
  ExternalDetector(ExternalDetectorRef ref, lm::EndpointConfig transport = {}, bool cache = false);

  std::string id() const override { return ref_.id; }
  Direction direction() const override { return ref_.score_direction; }
  double score(std::string_view text) const override;
  // Scores in request order; requests run with the transport's in-flight cap.
  std::vector<double> score_batch(const std::vector<std::string>& texts) const;

 private:
  double request(const std::string& text) const;

  ExternalDetectorRef ref_;
  std::string path_;
  std::unique_ptr<lm::JsonClient> client_;
  bool cache_enabled_;
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<std::string, double> cache_;
};

// Splits "http://host:port/path" into base and path.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace evadebench::detectors
