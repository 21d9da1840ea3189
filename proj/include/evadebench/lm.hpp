#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Uniform access to language-model capabilities: per-token scoring,
// next-token distributions, rewriting and embedding. Detectors, attacks
// and quality metrics only ever talk to these interfaces.
namespace evadebench::lm {

struct TokenScore {
  std::string token;
  double logprob = 0.0;      // natural log, <= 0
  std::int64_t rank = 1;     // 1-based; ties share the best rank
  double entropy = 0.0;      // nats
  bool rank_exact = true;    // false: realized token fell outside a truncated top-k
};

struct ScoredText {
  std::vector<TokenScore> tokens;
  std::string backend_id;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
};

enum class BackendKind { ngram_reference, remote_endpoint };

struct BackendDescriptor {
  std::string id;
  BackendKind kind = BackendKind::ngram_reference;
  std::optional<std::size_t> vocab_size;  // set for ngram_reference
  std::optional<std::size_t> top_k;       // set for remote_endpoint
  // Identifies the token vocabulary; backends may only be blended token by
  // token when their fingerprints match.
  std::optional<std::uint64_t> vocab_fingerprint;
};

// Throws InputError if the kind-specific fields are missing.
void validate(const BackendDescriptor& d);

struct RewriteRequest {
  std::string text;
  // Full prompt to send instead of the default paraphrase instruction. When
  // present it is expected to already embed `text`.
  std::optional<std::string> instruction;
  int max_tokens = 512;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;

  std::string rendered_prompt() const;
};

void validate(const RewriteRequest& r);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

// Entries sorted by descending logprob, ties by ascending token. For
// reference backends the entries cover the whole vocabulary and tail_mass is
// zero; truncated remote distributions report the residual mass.
struct TokenDistribution {
  std::vector<TokenLogprob> entries;
  double tail_mass = 0.0;
  bool truncated = false;

  // Sorts entries into canonical order.
  void canonicalize();
  // Logprob of `token`, or nullopt when it is not among the entries.
  std::optional<double> logprob_of(std::string_view token) const;
  // Entropy over the entries plus one pseudo-symbol carrying tail_mass.
  double entropy() const;
  double total_mass() const;
};

// What a backend saw at one position of a scored text.
struct PositionDistribution {
  std::string surface;  // token as produced by the tokenizer
  std::string token;    // token as known to the model (e.g. "<unk>")
  double logprob = 0.0; // of `token`
  TokenDistribution dist;
};

// Converts one position into a TokenScore under the rank tie rule: rank is
// 1 + number of entries with strictly higher probability. A token missing
// from a truncated distribution gets rank top_k + 1, rank_exact = false.
TokenScore score_position(const PositionDistribution& pos);

// Process-wide count of backend operations, read by the overhead module.
std::uint64_t backend_calls();
// Same count restricted to calls made from the current thread.
std::uint64_t thread_backend_calls();
void count_backend_call();
// Largest accelerator memory figure an endpoint reported since the last
// reset; 0 when none did.
std::uint64_t endpoint_peak_memory();
void report_endpoint_memory(std::uint64_t bytes);
void reset_endpoint_memory();

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  ScoredText score_text(std::string_view text) const;
  TokenDistribution next_token_distribution(std::string_view prefix) const;
  // Predictive distribution at every token of `text`.
  std::vector<PositionDistribution> position_distributions(std::string_view text) const;

 protected:
  virtual TokenDistribution do_next_token_distribution(std::string_view prefix) const = 0;
  virtual std::vector<PositionDistribution> do_position_distributions(std::string_view text) const = 0;
};

class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  // Never returns an empty string; throws BackendError instead.
  std::string rewrite(const RewriteRequest& req) const;

 protected:
  virtual std::string do_rewrite(const RewriteRequest& req) const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::size_t dimension() const = 0;
  std::vector<double> embed(std::string_view text) const;

 protected:
  virtual std::vector<double> do_embed(std::string_view text) const = 0;
};

// Samples a token from the entries of `dist`, renormalised over the
// entries (the tail of a truncated distribution is never sampled).
// `u` is a uniform draw in [0, 1).
const std::string& sample_token(const TokenDistribution& dist, double u);

}  // namespace evadebench::lm
