#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "evadebench/lm.hpp"

namespace evadebench::detectors {

enum class Direction { higher_is_mgt, lower_is_mgt, feature_vector };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

struct DetectorScore {
  std::string detector_id;
  std::string sample_id;
  std::vector<double> value;  // one entry, or the GLTR 4-vector
  Direction direction = Direction::higher_is_mgt;

  double scalar() const;  // throws for feature vectors
};

// Registry names, in the order reports list them.
const std::vector<std::string>& metric_detector_names();
const std::vector<std::string>& scalar_single_model_detectors();
Direction direction_of(std::string_view detector_id);

// Statistics of one ScoredText. All throw InputError on an empty input.
DetectorScore log_likelihood(const lm::ScoredText& st);
DetectorScore rank(const lm::ScoredText& st);
DetectorScore log_rank(const lm::ScoredText& st);
DetectorScore entropy(const lm::ScoredText& st);
// Fractions of tokens with rank in [1,10], [11,100], [101,1000], >1000.
// InputError when an inexact (truncated) rank could fall in more than one
// bucket.
DetectorScore gltr_features(const lm::ScoredText& st);
// |mean logprob| / mean log-rank. DegenerateError when every rank is 1.
DetectorScore lrr(const lm::ScoredText& st);

// Dispatch by registry name for the single-backend detectors.
DetectorScore score_by_name(std::string_view detector_id, const lm::ScoredText& st);

// Mean and variance of the scoring model's logprob when the token is drawn
// from the reference distribution. Used per position by fast_detect_gpt.
struct SamplingMoments {
  double mean = 0.0;
  double variance = 0.0;
};
SamplingMoments sampling_moments(const lm::TokenDistribution& scoring, const lm::TokenDistribution& reference);

struct DiscrepancyParts {
  double numerator = 0.0;   // sum over kept positions of (logprob - mean)
  double variance = 0.0;    // sum over kept positions of variance
  std::size_t kept = 0;
  std::size_t skipped = 0;  // zero-variance positions
};
DiscrepancyParts sampling_discrepancy_parts(const lm::LanguageModel& scoring, const lm::LanguageModel& reference,
                                            std::string_view text);

// Analytic sampling discrepancy, numerator / sqrt(variance).
// DegenerateError when every position has zero variance.
DetectorScore fast_detect_gpt(const lm::LanguageModel& scoring, const lm::LanguageModel& reference,
                              std::string_view text);

// exp(mean NLL under observer) / exp(mean cross-entropy of performer vs
// observer next-token distributions).
DetectorScore binoculars(const lm::LanguageModel& observer, const lm::LanguageModel& performer,
                         std::string_view text);

// Detector value oriented so that larger means "more machine-like".
double mgt_oriented(const DetectorScore& s);
double mgt_oriented(double value, Direction d);

}  // namespace evadebench::detectors
