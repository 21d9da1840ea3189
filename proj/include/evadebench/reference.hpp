#pragma once

// Desk-scale stand-ins for the production LLM backends. They are exact,
// deterministic and cheap, which is what the harness' own tests need.

#include <map>
#include <string>
#include <vector>

#include "evadebench/lm.hpp"

namespace evadebench::lm {

// Every vocabulary token has probability 1/V in every context.
class UniformModel final : public LanguageModel {
 public:
  UniformModel(std::vector<std::string> vocabulary, std::string id = "uniform");
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  TokenDistribution do_next_token_distribution(std::string_view prefix) const override;
  std::vector<PositionDistribution> do_position_distributions(std::string_view text) const override;

 private:
  TokenDistribution dist_;
  BackendDescriptor descriptor_;
};

// Probability 1 on a fixed successor: vocabulary[i] is always followed by
// vocabulary[(i + 1) % V] and a text starts with vocabulary[0]. Scoring a
// zero-probability token is a BackendError.
class DeterministicModel final : public LanguageModel {
 public:
  DeterministicModel(std::vector<std::string> vocabulary, std::string id = "deterministic");
  const BackendDescriptor& descriptor() const override { return descriptor_; }

  // The model's only possible text of `n` tokens.
  std::vector<std::string> greedy(std::size_t n) const;

 protected:
  TokenDistribution do_next_token_distribution(std::string_view prefix) const override;
  std::vector<PositionDistribution> do_position_distributions(std::string_view text) const override;

 private:
  TokenDistribution distribution_after(const std::string* previous) const;

  std::vector<std::string> vocab_;
  BackendDescriptor descriptor_;
};

class IdentityRewriter final : public Rewriter {
 public:
  explicit IdentityRewriter(std::string id = "identity");
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::string do_rewrite(const RewriteRequest& req) const override { return req.text; }

 private:
  BackendDescriptor descriptor_;
};

// Returns the rendered prompt, i.e. exactly what a remote endpoint would
// have been sent.
class EchoRewriter final : public Rewriter {
 public:
  explicit EchoRewriter(std::string id = "echo");
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::string do_rewrite(const RewriteRequest& req) const override { return req.rendered_prompt(); }

 private:
  BackendDescriptor descriptor_;
};

// word -> replacement candidates, keys lower-case.
using Lexicon = std::map<std::string, std::vector<std::string>>;

// Replaces each lexicon word with probability `substitution_probability`,
// picking uniformly among its candidates. Randomness comes only from the
// request seed, so a call is a pure function of (text, seed). Whitespace,
// punctuation and leading capitals are preserved.
class LexiconRewriter final : public Rewriter {
 public:
  LexiconRewriter(Lexicon lexicon, double substitution_probability, std::string id = "lexicon");
  const BackendDescriptor& descriptor() const override { return descriptor_; }
  const Lexicon& lexicon() const { return lexicon_; }
  double substitution_probability() const { return probability_; }

 protected:
  std::string do_rewrite(const RewriteRequest& req) const override;

 private:
  Lexicon lexicon_;
  double probability_;
  BackendDescriptor descriptor_;
};

// Bag-of-words feature hashing (FNV-1a of each token, modulo dimension).
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 1024, std::string id = "hashing-bow");
  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::size_t dimension() const override { return dimension_; }
  std::size_t bucket_of(std::string_view token) const;

 protected:
  std::vector<double> do_embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
  BackendDescriptor descriptor_;
};

}  // namespace evadebench::lm
