#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evadebench/corpus.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/qpa.hpp"
#include "evadebench/records.hpp"
#include "evadebench/reference.hpp"
#include "evadebench/text.hpp"
#include "evadebench/text_detector.hpp"

namespace evadebench::attacks {

// Neighbouring text handed to an attack that only sees one segment of a
// larger document. Attacks that cannot use it ignore it.
struct SegmentContext {
  std::string preceding;
  std::string following;
};

struct AttackResult {
  std::string text;
  nlohmann::json trace = nlohmann::json::array();
  bool no_op = false;
};

class Attack {
 public:
  virtual ~Attack() = default;
  virtual std::string id() const = 0;
  // Everything besides backends and the input that determines the output.
  virtual nlohmann::json params() const = 0;

  // Throws InputError on empty input and BackendError on empty output.
  AttackResult apply(std::string_view text, const SegmentContext& context = {}) const;

 protected:
  virtual AttackResult do_apply(std::string_view text, const SegmentContext& context) const = 0;
};

enum class Measurement {
  track,     // concurrent runs allowed, memory not recorded
  exclusive  // overhead measurement mode
};

AttackOutcome run_attack(const Attack& attack, const TextSample& sample, Measurement mode = Measurement::track);

// Attacks samples on up to `threads` workers; output order follows input.
std::vector<AttackOutcome> run_attacks(const Attack& attack, std::span<const TextSample> samples,
                                       std::size_t threads = 1);

// Leaves the text untouched. Useful as a control in scenarios and blends.
class IdentityAttack final : public Attack {
 public:
  std::string id() const override { return "identity"; }
  nlohmann::json params() const override { return nlohmann::json::object(); }

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;
};

struct ParaphraseParams {
  // Dipper-style control codes; when set the request is rendered as
  // "lexical = L, order = O <context> <sent> text </sent>".
  std::optional<int> lex_diversity;
  std::optional<int> order_diversity;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int max_tokens = 512;
};

nlohmann::json to_json(const ParaphraseParams& p);
ParaphraseParams paraphrase_params_from_json(const nlohmann::json& j);

// One rewrite pass over the whole text.
class ParaphraseAttack final : public Attack {
 public:
  ParaphraseAttack(const lm::Rewriter& rewriter, ParaphraseParams params = {});
  std::string id() const override { return "dipper"; }
  nlohmann::json params() const override;

  lm::RewriteRequest request_for(std::string_view text, const SegmentContext& context, std::uint64_t seed) const;

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  const lm::Rewriter& rewriter_;
  ParaphraseParams params_;
};

// Feeds the rewriter its own output `depth` times. Iteration i uses seed
// params.seed + i, so depth 1 equals ParaphraseAttack.
class RecursionAttack final : public Attack {
 public:
  RecursionAttack(const lm::Rewriter& rewriter, int depth = 5, ParaphraseParams params = {});
  std::string id() const override { return "recursion"; }
  nlohmann::json params() const override;
  int depth() const { return depth_; }

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  const lm::Rewriter& rewriter_;
  ParaphraseAttack pass_;
  int depth_;
  ParaphraseParams params_;
};

struct PromptTemplate {
  std::string id;
  std::string objective;
  std::string guidance;

  // Original Input, Attack Objective and Attack Guidance blocks, in order.
  std::string render(std::string_view original) const;
};

// Throws InputError for unknown ids. "default" always exists.
const PromptTemplate& prompt_template(const std::string& id);
std::vector<std::string> prompt_template_ids();

class PromptAttack final : public Attack {
 public:
  PromptAttack(const lm::Rewriter& rewriter, std::string template_id = "default", bool quality_preserving = false,
               double temperature = 0.0, std::uint64_t seed = 0);
  std::string id() const override { return qpa_ ? "prompt+qpa" : "prompt"; }
  nlohmann::json params() const override;
  std::string prompt_for(std::string_view text) const;

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  const lm::Rewriter& rewriter_;
  const PromptTemplate& template_;
  bool qpa_;
  double temperature_;
  std::uint64_t seed_;
};

// Source of replacement words for RAFT and synonym sets for HMGC.
class CandidateGenerator {
 public:
  virtual ~CandidateGenerator() = default;
  virtual std::string id() const = 0;
  // Up to `top_k` replacements for `word`, which occurs in `sentence`.
  virtual std::vector<std::string> candidates(std::string_view sentence, const text::Token& word,
                                              std::size_t top_k) const = 0;
};

class LexiconCandidates final : public CandidateGenerator {
 public:
  explicit LexiconCandidates(lm::Lexicon lexicon, std::string id = "lexicon");
  std::string id() const override { return id_; }
  std::vector<std::string> candidates(std::string_view sentence, const text::Token& word,
                                      std::size_t top_k) const override;
  const lm::Lexicon& lexicon() const { return lexicon_; }

 private:
  lm::Lexicon lexicon_;
  std::string id_;
};

// Asks a rewrite endpoint for a comma-separated list of replacements.
class RewriterCandidates final : public CandidateGenerator {
 public:
  explicit RewriterCandidates(const lm::Rewriter& rewriter, std::uint64_t seed = 0);
  std::string id() const override { return "rewriter:" + rewriter_.descriptor().id; }
  std::vector<std::string> candidates(std::string_view sentence, const text::Token& word,
                                      std::size_t top_k) const override;
  static std::string prompt(std::string_view sentence, std::string_view word, std::size_t top_k);
  static std::vector<std::string> parse(std::string_view completion);

 private:
  const lm::Rewriter& rewriter_;
  std::uint64_t seed_;
};

struct QpaSettings {
  qpa::QpaConstraints constraints;
  qpa::QualityBackends backends;
};

struct RaftParams {
  double proportion = 0.15;
  std::size_t top_k = 10;
  std::uint64_t seed = 0;
};

// Words entering the substitution step: ceil(proportion * words), at least
// one, at most all of them.
std::size_t raft_budget(std::size_t word_count, double proportion);

// Greedy word substitution against a proxy detector. Words are ranked by
// how much deleting them lowers the proxy's machine score; the top
// raft_budget() words are then visited in that order and each is replaced
// by the candidate with the lowest proxy score, if that is strictly lower
// than the current score.
class RaftAttack final : public Attack {
 public:
  RaftAttack(const detectors::TextDetector& proxy, const CandidateGenerator& generator, RaftParams params = {},
             std::optional<QpaSettings> qpa = std::nullopt);
  std::string id() const override { return qpa_ ? "raft+qpa" : "raft"; }
  nlohmann::json params() const override;

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  const detectors::TextDetector& proxy_;
  const CandidateGenerator& generator_;
  RaftParams params_;
  std::optional<QpaSettings> qpa_;
};

struct HmgcParams {
  std::size_t max_iters = 10;
  std::size_t top_k = 10;
  std::uint64_t seed = 0;
  std::string regime = "standard";  // standard | mismatched, recorded only
};

// Iterative synonym substitution against a surrogate whose score is
// P(machine). Each iteration ranks the not-yet-changed words by
// leave-one-out probability drop and applies the first substitution (in
// that order) that lowers the probability. Stops below 0.5, when the budget
// is spent or when nothing lowers the probability.
class HmgcAttack final : public Attack {
 public:
  HmgcAttack(const detectors::TextDetector& surrogate, const CandidateGenerator& synonyms, HmgcParams params = {});
  std::string id() const override { return "hmgc"; }
  nlohmann::json params() const override;

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  const detectors::TextDetector& surrogate_;
  const CandidateGenerator& synonyms_;
  HmgcParams params_;
};

struct ToblendParams {
  std::size_t prefix_tokens = 8;
  // Tokens to generate; 0 means the input's token count minus the prefix.
  std::size_t length = 0;
  std::uint64_t seed = 0;
};

// Token-level ensemble decoding: at each step one backend is drawn
// uniformly at random and its next token is sampled. All backends must
// share a vocabulary fingerprint.
class ToblendAttack final : public Attack {
 public:
  ToblendAttack(std::vector<const lm::LanguageModel*> backends, ToblendParams params = {},
                std::optional<QpaSettings> qpa = std::nullopt);
  std::string id() const override { return qpa_ ? "toblend+qpa" : "toblend"; }
  nlohmann::json params() const override;

  // Continues `prefix` by `length` tokens. `original` is only used by the
  // quality filter, which compares against its first tokens.
  AttackResult generate(std::span<const std::string> prefix, std::size_t length,
                        std::string_view original = {}) const;

 protected:
  AttackResult do_apply(std::string_view text, const SegmentContext& context) const override;

 private:
  std::vector<const lm::LanguageModel*> backends_;
  ToblendParams params_;
  std::optional<QpaSettings> qpa_;
};

// Throws InputError unless every backend carries the same fingerprint.
void require_shared_vocabulary(std::span<const lm::LanguageModel* const> backends);

// Backends and helpers an attack may draw on when built by name.
struct AttackResources {
  const lm::Rewriter* rewriter = nullptr;
  const detectors::TextDetector* proxy = nullptr;
  const CandidateGenerator* candidates = nullptr;
  const detectors::TextDetector* surrogate = nullptr;
  std::vector<const lm::LanguageModel*> blend_backends;
  std::optional<QpaSettings> qpa;  // applied to prompt, raft and toblend when set
};

// dipper, recursion, prompt, raft, hmgc, toblend (plus identity).
std::vector<std::string> attack_names();
bool is_registered(const std::string& name);
std::unique_ptr<Attack> make_attack(const std::string& name, const nlohmann::json& params,
                                    const AttackResources& resources);

}  // namespace evadebench::attacks
