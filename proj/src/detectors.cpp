#include "evadebench/detectors.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "evadebench/errors.hpp"

namespace evadebench::detectors {
namespace {

DetectorScore make(std::string id, double v) {
  DetectorScore s;
  s.direction = direction_of(id);
  s.detector_id = std::move(id);
  s.value = {v};
  return s;
}

void require_tokens(const lm::ScoredText& st) {
  if (st.tokens.empty()) throw InputError("detector input has no tokens");
}

double mean_logprob(const lm::ScoredText& st) {
  double sum = 0.0;
  for (const auto& t : st.tokens) sum += t.logprob;
  return sum / static_cast<double>(st.size());
}

double mean_log_rank(const lm::ScoredText& st) {
  double sum = 0.0;
  for (const auto& t : st.tokens) sum += std::log(static_cast<double>(t.rank));
  return sum / static_cast<double>(st.size());
}

// Logprob of `token` under `dist`; tokens outside a truncated distribution
// get the smaller of its lowest listed logprob and log(tail mass), an
// upper bound on any unlisted token.
double lookup(const std::unordered_map<std::string_view, double>& index, const lm::TokenDistribution& dist,
              std::string_view token) {
  if (auto it = index.find(token); it != index.end()) return it->second;
  if (!dist.truncated) return -std::numeric_limits<double>::infinity();
  double floor = dist.tail_mass > 0 ? std::log(dist.tail_mass) : -std::numeric_limits<double>::infinity();
  if (!dist.entries.empty()) floor = std::min(floor, dist.entries.back().logprob);
  return floor;
}

std::unordered_map<std::string_view, double> index_of(const lm::TokenDistribution& dist) {
  std::unordered_map<std::string_view, double> m;
  m.reserve(dist.entries.size());
  for (const auto& e : dist.entries) m.emplace(e.token, e.logprob);
  return m;
}

void require_aligned(const std::vector<lm::PositionDistribution>& a, const std::vector<lm::PositionDistribution>& b) {
  if (a.size() != b.size()) throw BackendError("backends tokenized the text differently");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].surface != b[i].surface) throw BackendError("backends tokenized the text differently");
  }
  if (a.empty()) throw InputError("detector input has no tokens");
}

}  // namespace

std::string to_string(Direction d) {
  switch (d) {
    case Direction::higher_is_mgt:
      return "higher_is_mgt";
    case Direction::lower_is_mgt:
      return "lower_is_mgt";
    case Direction::feature_vector:
      break;
  }
  return "feature_vector";
}

Direction parse_direction(const std::string& s) {
  if (s == "higher_is_mgt") return Direction::higher_is_mgt;
  if (s == "lower_is_mgt") return Direction::lower_is_mgt;
  if (s == "feature_vector") return Direction::feature_vector;
  throw InputError("unknown direction '" + s + "'");
}

double DetectorScore::scalar() const {
  if (direction == Direction::feature_vector || value.size() != 1) {
    throw InputError("detector '" + detector_id + "' does not produce a scalar");
  }
  return value[0];
}

const std::vector<std::string>& metric_detector_names() {
  static const std::vector<std::string> names = {"log_likelihood", "rank", "log_rank", "entropy",
                                                 "gltr", "lrr", "fast_detect_gpt", "binoculars"};
  return names;
}

const std::vector<std::string>& scalar_single_model_detectors() {
  static const std::vector<std::string> names = {"log_likelihood", "rank", "log_rank", "entropy", "lrr"};
  return names;
}

Direction direction_of(std::string_view id) {
  if (id == "log_likelihood" || id == "lrr" || id == "fast_detect_gpt") return Direction::higher_is_mgt;
  if (id == "rank" || id == "log_rank" || id == "entropy" || id == "binoculars") return Direction::lower_is_mgt;
  if (id == "gltr") return Direction::feature_vector;
  throw InputError("unknown metric detector '" + std::string(id) + "'");
}

DetectorScore log_likelihood(const lm::ScoredText& st) {
  require_tokens(st);
  return make("log_likelihood", mean_logprob(st));
}

DetectorScore rank(const lm::ScoredText& st) {
  require_tokens(st);
  double sum = 0.0;
  for (const auto& t : st.tokens) sum += static_cast<double>(t.rank);
  return make("rank", sum / static_cast<double>(st.size()));
}

DetectorScore log_rank(const lm::ScoredText& st) {
  require_tokens(st);
  return make("log_rank", mean_log_rank(st));
}

DetectorScore entropy(const lm::ScoredText& st) {
  require_tokens(st);
  double sum = 0.0;
  for (const auto& t : st.tokens) sum += t.entropy;
  return make("entropy", sum / static_cast<double>(st.size()));
}

DetectorScore gltr_features(const lm::ScoredText& st) {
  require_tokens(st);
  std::array<double, 4> counts{};
  for (const auto& t : st.tokens) {
    const std::int64_t r = t.rank;
    const int bucket = r <= 10 ? 0 : r <= 100 ? 1 : r <= 1000 ? 2 : 3;
    // An inexact rank is only a lower bound; it is fine when it already
    // sits in the open-ended last bucket.
    if (!t.rank_exact && bucket != 3) {
      throw InputError("inexact rank " + std::to_string(r) + " straddles a GLTR bucket boundary");
    }
    counts[bucket] += 1.0;
  }
  DetectorScore s;
  s.detector_id = "gltr";
  s.direction = Direction::feature_vector;
  const double n = static_cast<double>(st.size());
  for (double c : counts) s.value.push_back(c / n);
  return s;
}

DetectorScore lrr(const lm::ScoredText& st) {
  require_tokens(st);
  const double denom = mean_log_rank(st);
  if (denom <= 0.0) throw DegenerateError("LRR is undefined when every token has rank 1");
  return make("lrr", std::abs(mean_logprob(st)) / denom);
}

DetectorScore score_by_name(std::string_view id, const lm::ScoredText& st) {
  if (id == "log_likelihood") return log_likelihood(st);
  if (id == "rank") return rank(st);
  if (id == "log_rank") return log_rank(st);
  if (id == "entropy") return entropy(st);
  if (id == "gltr") return gltr_features(st);
  if (id == "lrr") return lrr(st);
  throw InputError("detector '" + std::string(id) + "' needs more than one scored text");
}

SamplingMoments sampling_moments(const lm::TokenDistribution& scoring, const lm::TokenDistribution& reference) {
  const auto index = index_of(scoring);
  double mass = 0.0;
  for (const auto& e : reference.entries) mass += std::exp(e.logprob);
  if (!(mass > 0.0)) throw BackendError("reference distribution has no mass");
  double m1 = 0.0, m2 = 0.0;
  for (const auto& e : reference.entries) {
    const double q = std::exp(e.logprob) / mass;
    if (q == 0.0) continue;
    const double s = lookup(index, scoring, e.token);
    m1 += q * s;
    m2 += q * s * s;
  }
  return {m1, std::max(0.0, m2 - m1 * m1)};
}

DiscrepancyParts sampling_discrepancy_parts(const lm::LanguageModel& scoring, const lm::LanguageModel& reference,
                                            std::string_view text) {
  const auto sp = scoring.position_distributions(text);
  const auto rp = reference.position_distributions(text);
  require_aligned(sp, rp);
  DiscrepancyParts parts;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto m = sampling_moments(sp[i].dist, rp[i].dist);
    if (!std::isfinite(m.mean) || !std::isfinite(m.variance)) {
      throw BackendError("scoring backend assigns zero probability to a reference token");
    }
    if (m.variance <= 1e-12) {
      ++parts.skipped;
      continue;
    }
    parts.numerator += sp[i].logprob - m.mean;
    parts.variance += m.variance;
    ++parts.kept;
  }
  return parts;
}

DetectorScore fast_detect_gpt(const lm::LanguageModel& scoring, const lm::LanguageModel& reference,
                              std::string_view text) {
  const auto parts = sampling_discrepancy_parts(scoring, reference, text);
  if (parts.kept == 0) throw DegenerateError("sampling discrepancy: zero variance at every position");
  return make("fast_detect_gpt", parts.numerator / std::sqrt(parts.variance));
}

DetectorScore binoculars(const lm::LanguageModel& observer, const lm::LanguageModel& performer,
                         std::string_view text) {
  const auto op = observer.position_distributions(text);
  const auto pp = performer.position_distributions(text);
  require_aligned(op, pp);
  double nll = 0.0, xent = 0.0;
  for (std::size_t i = 0; i < op.size(); ++i) {
    nll -= op[i].logprob;
    const auto index = index_of(op[i].dist);
    double mass = 0.0;
    for (const auto& e : pp[i].dist.entries) mass += std::exp(e.logprob);
    for (const auto& e : pp[i].dist.entries) {
      const double p = std::exp(e.logprob) / mass;
      if (p == 0.0) continue;
      xent -= p * lookup(index, op[i].dist, e.token);
    }
  }
  const double n = static_cast<double>(op.size());
  const double score = std::exp(nll / n - xent / n);
  if (!std::isfinite(score) || score <= 0.0) {
    throw DegenerateError("binoculars: cross-perplexity is zero or infinite");
  }
  return make("binoculars", score);
}

double mgt_oriented(double value, Direction d) {
  if (d == Direction::feature_vector) throw InputError("feature vectors have no orientation");
  return d == Direction::higher_is_mgt ? value : -value;
}

double mgt_oriented(const DetectorScore& s) { return mgt_oriented(s.scalar(), s.direction); }

}  // namespace evadebench::detectors
