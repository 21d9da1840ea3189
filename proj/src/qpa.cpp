#include "evadebench/qpa.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/text.hpp"

namespace evadebench::qpa {

using nlohmann::json;

namespace {

void require(const QualityBackends& b) {
  if (b.backend == nullptr || b.embedder == nullptr) throw InputError("quality filter needs a scoring backend and an embedder");
}

json bound(double v) { return std::isinf(v) ? json("inf") : json(v); }

double read_bound(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

}  // namespace

void validate(const QpaConstraints& c) {
  if (!(c.max_ppl_rel_change > 0) || !(c.max_fre_rel_change > 0)) {
    throw InputError("relative-change bounds must be positive");
  }
  if (!(c.min_similarity_word >= 0 && c.min_similarity_word <= 1) ||
      !(c.min_similarity_token >= 0 && c.min_similarity_token <= 1)) {
    throw InputError("similarity thresholds must lie in [0, 1]");
  }
}

json to_json(const QpaConstraints& c) {
  return {{"max_ppl_rel_change", bound(c.max_ppl_rel_change)},
          {"max_fre_rel_change", bound(c.max_fre_rel_change)},
          {"min_similarity_word", c.min_similarity_word},
          {"min_similarity_token", c.min_similarity_token}};
}

QpaConstraints constraints_from_json(const json& j) {
  QpaConstraints c;
  c.max_ppl_rel_change = read_bound(j, "max_ppl_rel_change", c.max_ppl_rel_change);
  c.max_fre_rel_change = read_bound(j, "max_fre_rel_change", c.max_fre_rel_change);
  c.min_similarity_word = j.value("min_similarity_word", c.min_similarity_word);
  c.min_similarity_token = j.value("min_similarity_token", c.min_similarity_token);
  validate(c);
  return c;
}

double relative_change(double before, double after) {
  return std::abs(after - before) / std::max(std::abs(before), 1.0);
}

const std::string& instruction_block() {
  static const std::string block =
      "And at the same time, you should keep the newly generated sentences: 1. PPL similar to the original text. "
      "2. Semantics similar to the original text. 3. The FRE (complexity of the sentence) is similar to the "
      "original text.\nHint: Try to find keywords to replace. Avoid complex words and sentences that are not "
      "commonly used by humans.";
  return block;
}

std::string qpa_prompt_augment(std::string_view base_prompt) {
  std::string out(base_prompt);
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += instruction_block();
  return out;
}

WordDecision qpa_filter_word_candidates(std::string_view sentence_before, std::span<const std::string> candidates,
                                        const QpaConstraints& constraints, const QualityBackends& backends,
                                        const Objective& objective) {
  if (candidates.empty()) throw InputError("no candidates to filter");
  require(backends);
  const double ppl_before = quality::perplexity(*backends.backend, sentence_before);
  const double fre_before = quality::flesch_reading_ease(sentence_before);
  const auto emb_before = backends.embedder->embed(sentence_before);

  WordDecision d;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    WordCandidateCheck c;
    c.sentence = candidates[i];
    c.ppl_before = ppl_before;
    c.fre_before = fre_before;
    if (candidates[i] == sentence_before) {
      c.ppl_after = ppl_before;
      c.fre_after = fre_before;
      c.similarity = 1.0;
    } else {
      c.ppl_after = quality::perplexity(*backends.backend, candidates[i]);
      c.fre_after = quality::flesch_reading_ease(candidates[i]);
      c.similarity = quality::cosine(emb_before, backends.embedder->embed(candidates[i]));
    }
    c.ppl_rel_change = relative_change(c.ppl_before, c.ppl_after);
    c.fre_rel_change = relative_change(c.fre_before, c.fre_after);
    if (!(c.ppl_rel_change < constraints.max_ppl_rel_change)) c.reasons.push_back("ppl");
    if (!(c.fre_rel_change < constraints.max_fre_rel_change)) c.reasons.push_back("fre");
    if (constraints.min_similarity_word > 0 && !(c.similarity > constraints.min_similarity_word) &&
        candidates[i] != sentence_before) {
      c.reasons.push_back("similarity");
    }
    c.passed = c.reasons.empty();
    if (c.passed) {
      const double v = objective ? objective(i) : static_cast<double>(i);
      if (v < best) {
        best = v;
        d.chosen = i;
      }
    }
    d.checks.push_back(std::move(c));
  }
  return d;
}

TokenDecision qpa_select_token(std::span<const std::string> sentence_so_far, std::string_view original_sentence,
                               std::span<const TokenCandidate> candidates, const QpaConstraints& constraints,
                               const QualityBackends& backends, std::size_t host_choice) {
  if (candidates.empty()) throw InputError("no token candidates");
  if (host_choice >= candidates.size()) throw InputError("host choice out of range");
  require(backends);
  TokenDecision d;
  d.original_ppl = quality::perplexity(*backends.backend, original_sentence);
  const auto emb_original = backends.embedder->embed(original_sentence);

  std::vector<std::string> tokens(sentence_so_far.begin(), sentence_so_far.end());
  double best = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    tokens.push_back(candidates[i].token);
    TokenCandidateCheck c;
    c.candidate_text = text::detokenize(tokens);
    tokens.pop_back();
    c.similarity = quality::cosine(emb_original, backends.embedder->embed(c.candidate_text));
    c.ppl = quality::perplexity(*backends.backend, c.candidate_text);
    c.ppl_diff = std::abs(c.ppl - d.original_ppl);
    c.passed = constraints.min_similarity_token == 0 || c.similarity > constraints.min_similarity_token;
    if (c.passed && c.ppl_diff < best) {
      best = c.ppl_diff;
      chosen = i;
    }
    d.checks.push_back(std::move(c));
  }
  if (chosen) {
    d.chosen = *chosen;
  } else {
    d.chosen = host_choice;
    d.fallback = true;
  }
  return d;
}

json to_json(const WordCandidateCheck& c) {
  return {{"sentence", c.sentence},
          {"ppl_before", c.ppl_before},
          {"ppl_after", c.ppl_after},
          {"ppl_rel_change", c.ppl_rel_change},
          {"fre_before", c.fre_before},
          {"fre_after", c.fre_after},
          {"fre_rel_change", c.fre_rel_change},
          {"similarity", c.similarity},
          {"passed", c.passed},
          {"reasons", c.reasons}};
}

json to_json(const TokenCandidateCheck& c) {
  return {{"candidate_text", c.candidate_text},
          {"similarity", c.similarity},
          {"ppl", c.ppl},
          {"ppl_diff", c.ppl_diff},
          {"passed", c.passed}};
}

}  // namespace evadebench::qpa
