#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/lm.hpp"

// Quality-preserving filters wrapped around the prompt, RAFT and TOBLEND
// attacks: candidates that move perplexity, readability or meaning too far
// from the original are discarded before the host attack picks one.
namespace evadebench::qpa {

struct QpaConstraints {
  double max_ppl_rel_change = 0.05;
  double max_fre_rel_change = 0.05;
  double min_similarity_word = 0.95;
  double min_similarity_token = 0.70;
};

// Relative-change bounds must be positive (infinity disables them); a
// similarity threshold of 0 disables that check.
void validate(const QpaConstraints& c);
nlohmann::json to_json(const QpaConstraints& c);
QpaConstraints constraints_from_json(const nlohmann::json& j);

// |after - before| / max(|before|, 1).
double relative_change(double before, double after);

// Instruction appended to rewriting prompts.
const std::string& instruction_block();
std::string qpa_prompt_augment(std::string_view base_prompt);

struct QualityBackends {
  const lm::LanguageModel* backend = nullptr;  // perplexity
  const lm::Embedder* embedder = nullptr;      // similarity
};

struct WordCandidateCheck {
  std::string sentence;
  double ppl_before = 0.0;
  double ppl_after = 0.0;
  double ppl_rel_change = 0.0;
  double fre_before = 0.0;
  double fre_after = 0.0;
  double fre_rel_change = 0.0;
  double similarity = 0.0;
  bool passed = false;
  std::vector<std::string> reasons;  // violated constraints
};

struct WordDecision {
  std::optional<std::size_t> chosen;  // index into the candidates; empty = keep original
  std::vector<WordCandidateCheck> checks;
};

// Host objective for a surviving candidate; lower is better.
using Objective = std::function<double(std::size_t candidate_index)>;

// Checks each candidate sentence against `sentence_before` and picks the
// survivor that minimises `objective` (first survivor when no objective is
// given, ties keep the earlier candidate).
WordDecision qpa_filter_word_candidates(std::string_view sentence_before, std::span<const std::string> candidates,
                                        const QpaConstraints& constraints, const QualityBackends& backends,
                                        const Objective& objective = {});

struct TokenCandidate {
  std::string backend_id;
  std::string token;
};

struct TokenCandidateCheck {
  std::string candidate_text;
  double similarity = 0.0;
  double ppl = 0.0;
  double ppl_diff = 0.0;  // |ppl(candidate) - ppl(original)|
  bool passed = false;
};

struct TokenDecision {
  std::size_t chosen = 0;  // index into the candidates
  bool fallback = false;   // every candidate failed the similarity filter
  double original_ppl = 0.0;
  std::vector<TokenCandidateCheck> checks;
};

// Candidate i is `sentence_so_far` extended by candidates[i].token. Keeps
// candidates whose similarity to `original_sentence` exceeds the token
// threshold and returns the one with the smallest perplexity difference
// (ties: lower index). When none survive, returns `host_choice` flagged
// as a fallback.
TokenDecision qpa_select_token(std::span<const std::string> sentence_so_far, std::string_view original_sentence,
                               std::span<const TokenCandidate> candidates, const QpaConstraints& constraints,
                               const QualityBackends& backends, std::size_t host_choice = 0);

nlohmann::json to_json(const WordCandidateCheck& c);
nlohmann::json to_json(const TokenCandidateCheck& c);

}  // namespace evadebench::qpa
