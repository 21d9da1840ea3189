#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/corpus.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/records.hpp"

namespace evadebench::quality {

// exp(-mean token logprob). InputError when the text has no tokens.
double perplexity(const lm::LanguageModel& backend, std::string_view text);

double cosine(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const lm::Embedder& embedder, std::string_view a, std::string_view b);

// Word-level longest common subsequence (classic O(n*m) table).
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// ROUGE-L F1 over word tokens: P = LCS/|candidate|, R = LCS/|reference|.
// Returns 0 when either side has no words.
double rouge_l(std::string_view reference, std::string_view candidate);
double rouge_l_tokens(std::span<const std::string> reference, std::span<const std::string> candidate);

// Vowel groups (aeiouy), minus a silent trailing 'e' unless the word ends
// in consonant + "le"; at least 1.
int count_syllables(std::string_view word);

struct ReadabilityCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};
ReadabilityCounts readability_counts(std::string_view text);

// 206.835 - 1.015 * words/sentences - 84.6 * syllables/words.
// InputError when the text has no sentence or no word.
double flesch_reading_ease(std::string_view text);

struct QualityReport {
  std::string sample_id;
  std::string attack_id;
  double ppl_before = 0.0;
  double ppl_after = 0.0;
  double cs = 0.0;
  double rouge_l = 0.0;
  double fre_before = 0.0;
  double fre_after = 0.0;

  double ppl_delta() const { return ppl_after - ppl_before; }
  double fre_delta() const { return fre_after - fre_before; }
};

QualityReport quality_report(const TextSample& original, const AttackOutcome& outcome,
                             const lm::LanguageModel& backend, const lm::Embedder& embedder);

// Unweighted mean of every field; sample_id becomes "*" and n is returned.
struct QualityAggregate {
  std::string attack_id;
  std::size_t n = 0;
  double ppl_before = 0.0;
  double ppl_after = 0.0;
  double ppl_delta = 0.0;
  double abs_ppl_delta = 0.0;
  double cs = 0.0;
  double rouge_l = 0.0;
  double fre_before = 0.0;
  double fre_after = 0.0;
  double fre_delta = 0.0;
  double abs_fre_delta = 0.0;
};
QualityAggregate aggregate(std::span<const QualityReport> reports);

nlohmann::json to_json(const QualityReport& r);
QualityReport quality_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QualityAggregate& a);

}  // namespace evadebench::quality
