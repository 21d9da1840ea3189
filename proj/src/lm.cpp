#include "evadebench/lm.hpp"

#include <algorithm>
#include <cmath>

#include "evadebench/errors.hpp"

namespace evadebench::lm {
namespace {

std::atomic<std::uint64_t> g_backend_calls{0};
std::atomic<std::uint64_t> g_endpoint_memory{0};
thread_local std::uint64_t t_backend_calls = 0;

}  // namespace

void validate(const BackendDescriptor& d) {
  if (d.id.empty()) throw InputError("backend descriptor has an empty id");
  if (d.kind == BackendKind::ngram_reference && (!d.vocab_size || *d.vocab_size == 0)) {
    throw InputError("reference backend '" + d.id + "' needs a vocab_size");
  }
  if (d.kind == BackendKind::remote_endpoint && (!d.top_k || *d.top_k == 0)) {
    throw InputError("remote backend '" + d.id + "' needs a top_k");
  }
}

std::string RewriteRequest::rendered_prompt() const {
  if (instruction) return *instruction;
  return "Paraphrase the following text. Keep its meaning, change its wording.\n\n" + text;
}

void validate(const RewriteRequest& r) {
  if (r.max_tokens < 1) throw InputError("rewrite request needs max_tokens >= 1");
  if (!(r.temperature >= 0.0)) throw InputError("rewrite temperature must be non-negative");
  if (r.text.empty()) throw InputError("rewrite request has empty text");
}

void TokenDistribution::canonicalize() {
  std::sort(entries.begin(), entries.end(), [](const TokenLogprob& a, const TokenLogprob& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.token < b.token;
  });
}

std::optional<double> TokenDistribution::logprob_of(std::string_view token) const {
  for (const auto& e : entries) {
    if (e.token == token) return e.logprob;
  }
  return std::nullopt;
}

double TokenDistribution::entropy() const {
  double h = 0.0;
  for (const auto& e : entries) {
    if (std::isinf(e.logprob)) continue;  // p = 0 contributes nothing
    h -= std::exp(e.logprob) * e.logprob;
  }
  if (tail_mass > 0.0) h -= tail_mass * std::log(tail_mass);
  return std::max(h, 0.0);
}

double TokenDistribution::total_mass() const {
  double m = tail_mass;
  for (const auto& e : entries) m += std::exp(e.logprob);
  return m;
}

TokenScore score_position(const PositionDistribution& pos) {
  TokenScore ts;
  ts.token = pos.surface;
  ts.logprob = std::min(pos.logprob, 0.0);
  ts.entropy = pos.dist.entropy();
  bool found = false;
  std::int64_t higher = 0;
  for (const auto& e : pos.dist.entries) {
    if (e.logprob > pos.logprob) ++higher;
    if (e.token == pos.token) found = true;
  }
  if (found || !pos.dist.truncated) {
    ts.rank = higher + 1;
    ts.rank_exact = true;
  } else {
    ts.rank = static_cast<std::int64_t>(pos.dist.entries.size()) + 1;
    ts.rank_exact = false;
  }
  return ts;
}

std::uint64_t backend_calls() { return g_backend_calls.load(); }
std::uint64_t thread_backend_calls() { return t_backend_calls; }
void count_backend_call() {
  g_backend_calls.fetch_add(1);
  ++t_backend_calls;
}

std::uint64_t endpoint_peak_memory() { return g_endpoint_memory.load(); }

void report_endpoint_memory(std::uint64_t bytes) {
  std::uint64_t cur = g_endpoint_memory.load();
  while (bytes > cur && !g_endpoint_memory.compare_exchange_weak(cur, bytes)) {
  }
}

void reset_endpoint_memory() { g_endpoint_memory.store(0); }

ScoredText LanguageModel::score_text(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
    throw InputError("cannot score empty text");
  }
  ScoredText out;
  out.backend_id = descriptor().id;
  for (const auto& pos : position_distributions(text)) out.tokens.push_back(score_position(pos));
  if (out.tokens.empty()) throw BackendError("backend '" + descriptor().id + "' returned no tokens");
  return out;
}

TokenDistribution LanguageModel::next_token_distribution(std::string_view prefix) const {
  count_backend_call();
  return do_next_token_distribution(prefix);
}

std::vector<PositionDistribution> LanguageModel::position_distributions(std::string_view text) const {
  count_backend_call();
  return do_position_distributions(text);
}

std::string Rewriter::rewrite(const RewriteRequest& req) const {
  validate(req);
  count_backend_call();
  std::string out = do_rewrite(req);
  if (out.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
    throw BackendError("rewriter '" + descriptor().id + "' returned an empty completion");
  }
  return out;
}

std::vector<double> Embedder::embed(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
    throw InputError("cannot embed empty text");
  }
  count_backend_call();
  auto v = do_embed(text);
  if (v.size() != dimension()) throw BackendError("embedder '" + descriptor().id + "' returned wrong dimension");
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    throw BackendError("embedder '" + descriptor().id + "' returned an all-zero vector");
  }
  return v;
}

const std::string& sample_token(const TokenDistribution& dist, double u) {
  if (dist.entries.empty()) throw BackendError("cannot sample from an empty distribution");
  double total = 0.0;
  for (const auto& e : dist.entries) total += std::exp(e.logprob);
  double target = u * total;
  for (const auto& e : dist.entries) {
    target -= std::exp(e.logprob);
    if (target < 0.0) return e.token;
  }
  // Rounding left a sliver of mass; fall back to the last positive entry.
  for (auto it = dist.entries.rbegin(); it != dist.entries.rend(); ++it) {
    if (!std::isinf(it->logprob)) return it->token;
  }
  return dist.entries.back().token;
}

}  // namespace evadebench::lm
