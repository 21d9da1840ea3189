#include "evadebench/text_detector.hpp"

#include "evadebench/errors.hpp"

namespace evadebench::detectors {

std::vector<double> metric_features(std::string_view id, const MetricBackends& b, std::string_view text) {
  if (!b.scoring) throw InputError("metric detectors need a scoring backend");
  if (id == "fast_detect_gpt") {
    return fast_detect_gpt(*b.scoring, b.fast_reference ? *b.fast_reference : *b.scoring, text).value;
  }
  if (id == "binoculars") {
    const auto& observer = b.binoculars_observer ? *b.binoculars_observer : *b.scoring;
    const auto& performer = b.binoculars_performer ? *b.binoculars_performer : observer;
    return binoculars(observer, performer, text).value;
  }
  return score_by_name(id, b.scoring->score_text(text)).value;
}

MetricDetector::MetricDetector(std::string detector_id, MetricBackends backends)
    : id_(std::move(detector_id)), direction_(direction_of(id_)), backends_(backends) {
  if (direction_ == Direction::feature_vector) {
    throw InputError("detector '" + id_ + "' yields a feature vector; wrap it in a classifier");
  }
  if (!backends_.scoring) throw InputError("metric detectors need a scoring backend");
}

double MetricDetector::score(std::string_view text) const { return metric_features(id_, backends_, text).at(0); }

MetricClassifierDetector::MetricClassifierDetector(std::string detector_id, MetricBackends backends,
                                                   LogisticClassifier head)
    : id_(std::move(detector_id)), backends_(backends), head_(std::move(head)) {
  direction_of(id_);
}

double MetricClassifierDetector::score(std::string_view text) const {
  return head_.predict(metric_features(id_, backends_, text));
}

MetricClassifierDetector train_metric_classifier(std::string detector_id, MetricBackends backends,
                                                 std::span<const std::string> human_texts,
                                                 std::span<const std::string> machine_texts,
                                                 const LogisticOptions& options) {
  std::vector<LabeledFeatures> data;
  for (const auto& t : human_texts) data.push_back({metric_features(detector_id, backends, t), 0});
  for (const auto& t : machine_texts) data.push_back({metric_features(detector_id, backends, t), 1});
  std::vector<std::string> spec;
  if (detector_id == "gltr") {
    spec = {"gltr_top10", "gltr_top100", "gltr_top1000", "gltr_rest"};
  } else {
    spec = {detector_id};
  }
  auto head = train_classifier(data, std::move(spec), options);
  return MetricClassifierDetector(std::move(detector_id), backends, std::move(head));
}

}  // namespace evadebench::detectors
