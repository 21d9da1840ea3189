#include "evadebench/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evadebench/errors.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/random.hpp"
#include "evadebench/text.hpp"

namespace evadebench::lm {
namespace {

BackendDescriptor reference_descriptor(std::string id, std::vector<std::string> vocab) {
  std::sort(vocab.begin(), vocab.end());
  BackendDescriptor d;
  d.id = std::move(id);
  d.kind = BackendKind::ngram_reference;
  d.vocab_size = vocab.size();
  d.vocab_fingerprint = vocabulary_fingerprint(vocab);
  return d;
}

std::vector<std::string> dedupe(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.empty()) throw InputError("reference backend needs a non-empty vocabulary");
  return v;
}

}  // namespace

UniformModel::UniformModel(std::vector<std::string> vocabulary, std::string id) {
  vocabulary = dedupe(std::move(vocabulary));
  const double lp = -std::log(static_cast<double>(vocabulary.size()));
  for (const auto& t : vocabulary) dist_.entries.push_back({t, lp});
  dist_.canonicalize();
  descriptor_ = reference_descriptor(std::move(id), std::move(vocabulary));
}

TokenDistribution UniformModel::do_next_token_distribution(std::string_view) const { return dist_; }

std::vector<PositionDistribution> UniformModel::do_position_distributions(std::string_view input) const {
  std::vector<PositionDistribution> out;
  for (auto& tok : text::token_strings(input)) {
    auto lp = dist_.logprob_of(tok);
    if (!lp) throw BackendError("token '" + tok + "' is outside the vocabulary of '" + descriptor_.id + "'");
    out.push_back({tok, tok, *lp, dist_});
  }
  return out;
}

DeterministicModel::DeterministicModel(std::vector<std::string> vocabulary, std::string id)
    : vocab_(std::move(vocabulary)) {
  if (vocab_.empty()) throw InputError("deterministic backend needs a non-empty vocabulary");
  auto sorted = dedupe(vocab_);
  if (sorted.size() != vocab_.size()) throw InputError("deterministic backend vocabulary has duplicates");
  descriptor_ = reference_descriptor(std::move(id), vocab_);
}

std::vector<std::string> DeterministicModel::greedy(std::size_t n) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab_[i % vocab_.size()]);
  return out;
}

TokenDistribution DeterministicModel::distribution_after(const std::string* previous) const {
  std::size_t next = 0;
  if (previous) {
    auto it = std::find(vocab_.begin(), vocab_.end(), *previous);
    if (it == vocab_.end()) throw BackendError("token '" + *previous + "' is outside the vocabulary");
    next = (static_cast<std::size_t>(it - vocab_.begin()) + 1) % vocab_.size();
  }
  TokenDistribution d;
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    d.entries.push_back({vocab_[i], i == next ? 0.0 : -std::numeric_limits<double>::infinity()});
  }
  d.canonicalize();
  return d;
}

TokenDistribution DeterministicModel::do_next_token_distribution(std::string_view prefix) const {
  const auto toks = text::token_strings(prefix);
  return distribution_after(toks.empty() ? nullptr : &toks.back());
}

std::vector<PositionDistribution> DeterministicModel::do_position_distributions(std::string_view input) const {
  const auto toks = text::token_strings(input);
  std::vector<PositionDistribution> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    auto dist = distribution_after(i == 0 ? nullptr : &toks[i - 1]);
    auto lp = dist.logprob_of(toks[i]);
    if (!lp) throw BackendError("token '" + toks[i] + "' is outside the vocabulary");
    if (std::isinf(*lp)) throw BackendError("token '" + toks[i] + "' has zero probability");
    out.push_back({toks[i], toks[i], *lp, std::move(dist)});
  }
  return out;
}

IdentityRewriter::IdentityRewriter(std::string id) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::ngram_reference;
  descriptor_.vocab_size = 1;
}

EchoRewriter::EchoRewriter(std::string id) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::ngram_reference;
  descriptor_.vocab_size = 1;
}

LexiconRewriter::LexiconRewriter(Lexicon lexicon, double substitution_probability, std::string id)
    : lexicon_(std::move(lexicon)), probability_(substitution_probability) {
  if (!(probability_ >= 0.0 && probability_ <= 1.0)) {
    throw InputError("substitution probability must be in [0, 1]");
  }
  for (auto it = lexicon_.begin(); it != lexicon_.end();) {
    it = it->second.empty() ? lexicon_.erase(it) : std::next(it);
  }
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::ngram_reference;
  descriptor_.vocab_size = std::max<std::size_t>(lexicon_.size(), 1);
}

std::string LexiconRewriter::do_rewrite(const RewriteRequest& req) const {
  Rng rng(req.seed.value_or(0));
  const auto tokens = text::tokenize(req.text);
  std::string out;
  std::size_t cursor = 0;
  for (const auto& tok : tokens) {
    if (!tok.is_word) continue;
    auto it = lexicon_.find(tok.text);
    if (it == lexicon_.end()) continue;
    if (!rng.bernoulli(probability_)) continue;
    const auto& choice = it->second[rng.below(it->second.size())];
    out.append(req.text, cursor, tok.begin - cursor);
    out += text::match_case(std::string_view(req.text).substr(tok.begin, tok.end - tok.begin), choice);
    cursor = tok.end;
  }
  out.append(req.text, cursor, std::string::npos);
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::string id) : dimension_(dimension) {
  if (dimension_ == 0) throw InputError("embedding dimension must be positive");
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::ngram_reference;
  descriptor_.vocab_size = dimension_;
}

std::size_t HashingEmbedder::bucket_of(std::string_view token) const { return fnv1a(token) % dimension_; }

std::vector<double> HashingEmbedder::do_embed(std::string_view input) const {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& tok : text::token_strings(input)) v[bucket_of(tok)] += 1.0;
  return v;
}

}  // namespace evadebench::lm
