#include "evadebench/attacks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "evadebench/errors.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/overhead.hpp"
#include "evadebench/random.hpp"

namespace evadebench::attacks {

using nlohmann::json;

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos; }

std::vector<text::Token> word_tokens(std::string_view s) {
  auto toks = text::tokenize(s);
  std::erase_if(toks, [](const text::Token& t) { return !t.is_word; });
  return toks;
}

// Byte range [begin, end) of the sentence containing `pos`.
std::pair<std::size_t, std::size_t> sentence_around(std::string_view s, std::size_t pos) {
  const auto split = text::split_sentences(s);
  std::size_t off = split.leading.size();
  for (std::size_t i = 0; i < split.size(); ++i) {
    const std::size_t end = off + split.sentences[i].size();
    if (pos < end || i + 1 == split.size()) return {off, end};
    off = end + split.separators[i].size();
  }
  return {0, s.size()};
}

// Candidates reduced to distinct single lower-case words other than `word`.
std::vector<std::string> clean_candidates(std::vector<std::string> raw, std::string_view word, std::size_t top_k) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& c : raw) {
    const auto toks = text::tokenize(c);
    if (toks.size() != 1 || !toks[0].is_word) continue;
    if (toks[0].text == word) continue;
    if (!seen.insert(toks[0].text).second) continue;
    out.push_back(toks[0].text);
    if (out.size() == top_k) break;
  }
  return out;
}

std::optional<std::uint64_t> read_seed(const json& j, const char* key = "seed") {
  if (!j.contains(key)) return std::nullopt;
  return j.at(key).get<std::uint64_t>();
}

}  // namespace

AttackResult Attack::apply(std::string_view input, const SegmentContext& context) const {
  if (blank(input)) throw InputError("attack '" + id() + "' got empty input");
  auto r = do_apply(input, context);
  if (blank(r.text)) throw BackendError("attack '" + id() + "' produced empty text");
  return r;
}

AttackOutcome run_attack(const Attack& attack, const TextSample& sample, Measurement mode) {
  AttackOutcome o;
  o.sample_id = sample.id;
  o.attack_id = attack.id();
  o.params = attack.params();
  AttackResult r;
  const auto invocation = [&] { r = attack.apply(sample.text); };
  const std::size_t length = text::token_count(sample.text);
  if (mode == Measurement::exclusive) {
    o.resource = overhead::measure(o.attack_id, sample.id, length, invocation);
  } else {
    overhead::ActiveRun guard;
    o.resource = overhead::track(o.attack_id, sample.id, length, invocation);
  }
  o.attacked_text = std::move(r.text);
  o.trace = std::move(r.trace);
  o.no_op = r.no_op;
  return o;
}

std::vector<AttackOutcome> run_attacks(const Attack& attack, std::span<const TextSample> samples,
                                       std::size_t threads) {
  std::vector<AttackOutcome> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        out[i] = run_attack(attack, samples[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(samples.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

AttackResult IdentityAttack::do_apply(std::string_view input, const SegmentContext&) const {
  return {std::string(input), json::array(), true};
}

json to_json(const ParaphraseParams& p) {
  json j = {{"temperature", p.temperature}, {"seed", p.seed}, {"max_tokens", p.max_tokens}};
  if (p.lex_diversity) j["lex_diversity"] = *p.lex_diversity;
  if (p.order_diversity) j["order_diversity"] = *p.order_diversity;
  return j;
}

ParaphraseParams paraphrase_params_from_json(const json& j) {
  ParaphraseParams p;
  if (j.contains("lex_diversity")) p.lex_diversity = j.at("lex_diversity").get<int>();
  if (j.contains("order_diversity")) p.order_diversity = j.at("order_diversity").get<int>();
  p.temperature = j.value("temperature", p.temperature);
  p.seed = read_seed(j).value_or(p.seed);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  return p;
}

ParaphraseAttack::ParaphraseAttack(const lm::Rewriter& rewriter, ParaphraseParams params)
    : rewriter_(rewriter), params_(params) {
  for (auto v : {params_.lex_diversity, params_.order_diversity}) {
    if (v && (*v < 0 || *v > 100)) throw InputError("diversity codes must lie in [0, 100]");
  }
}

json ParaphraseAttack::params() const {
  auto j = to_json(params_);
  j["rewriter"] = rewriter_.descriptor().id;
  return j;
}

lm::RewriteRequest ParaphraseAttack::request_for(std::string_view input, const SegmentContext& context,
                                                 std::uint64_t seed) const {
  lm::RewriteRequest req;
  req.text = std::string(input);
  req.temperature = params_.temperature;
  req.max_tokens = params_.max_tokens;
  req.seed = seed;
  if (params_.lex_diversity || params_.order_diversity) {
    std::string prompt = "lexical = " + std::to_string(params_.lex_diversity.value_or(0)) +
                         ", order = " + std::to_string(params_.order_diversity.value_or(0));
    if (!context.preceding.empty()) prompt += " " + context.preceding;
    prompt += " <sent> " + req.text + " </sent>";
    req.instruction = std::move(prompt);
  }
  lm::validate(req);
  return req;
}

AttackResult ParaphraseAttack::do_apply(std::string_view input, const SegmentContext& context) const {
  const auto req = request_for(input, context, params_.seed);
  AttackResult r;
  r.text = rewriter_.rewrite(req);
  r.trace.push_back({{"call", 0}, {"seed", params_.seed}, {"input", req.text}, {"output", r.text}});
  return r;
}

RecursionAttack::RecursionAttack(const lm::Rewriter& rewriter, int depth, ParaphraseParams params)
    : rewriter_(rewriter), pass_(rewriter, params), depth_(depth), params_(params) {
  if (depth_ < 1) throw InputError("recursion depth must be at least 1");
}

json RecursionAttack::params() const {
  auto j = pass_.params();
  j["depth"] = depth_;
  return j;
}

AttackResult RecursionAttack::do_apply(std::string_view input, const SegmentContext& context) const {
  AttackResult r;
  r.text = std::string(input);
  for (int i = 0; i < depth_; ++i) {
    const std::uint64_t seed = params_.seed + static_cast<std::uint64_t>(i);
    const auto req = pass_.request_for(r.text, context, seed);
    std::string out;
    try {
      out = rewriter_.rewrite(req);
    } catch (const Error& e) {
      throw BackendError("recursion iteration " + std::to_string(i) + ": " + e.what());
    }
    r.trace.push_back({{"iteration", i}, {"seed", seed}, {"input", r.text}, {"output", out}});
    r.text = std::move(out);
  }
  return r;
}

std::string PromptTemplate::render(std::string_view original) const {
  std::string p = "Original Input:\n";
  p += original;
  p += "\n\nAttack Objective:\n" + objective + "\n\nAttack Guidance:\n" + guidance + "\n";
  return p;
}

namespace {

const std::vector<PromptTemplate>& templates() {
  static const std::vector<PromptTemplate> all = {
      {"default",
       "Rewrite the text above so that a detector of machine-generated text judges it to be written by a person.",
       "Keep every fact and the overall meaning. Vary sentence length and word choice the way people do. "
       "Reply with the rewritten text only."},
      {"minimal", "Rewrite the text above so that it reads as human-written.", "Reply with the rewritten text only."},
  };
  return all;
}

}  // namespace

const PromptTemplate& prompt_template(const std::string& id) {
  for (const auto& t : templates()) {
    if (t.id == id) return t;
  }
  throw InputError("unknown prompt template '" + id + "'");
}

std::vector<std::string> prompt_template_ids() {
  std::vector<std::string> out;
  for (const auto& t : templates()) out.push_back(t.id);
  return out;
}

PromptAttack::PromptAttack(const lm::Rewriter& rewriter, std::string template_id, bool quality_preserving,
                           double temperature, std::uint64_t seed)
    : rewriter_(rewriter),
      template_(prompt_template(template_id)),
      qpa_(quality_preserving),
      temperature_(temperature),
      seed_(seed) {}

json PromptAttack::params() const {
  return {{"rewriter", rewriter_.descriptor().id},
          {"template", template_.id},
          {"qpa", qpa_},
          {"temperature", temperature_},
          {"seed", seed_}};
}

std::string PromptAttack::prompt_for(std::string_view input) const {
  auto p = template_.render(input);
  return qpa_ ? qpa::qpa_prompt_augment(p) : p;
}

AttackResult PromptAttack::do_apply(std::string_view input, const SegmentContext&) const {
  lm::RewriteRequest req;
  req.text = std::string(input);
  req.instruction = prompt_for(input);
  req.temperature = temperature_;
  req.seed = seed_;
  AttackResult r;
  r.text = rewriter_.rewrite(req);
  r.trace.push_back({{"prompt", *req.instruction}, {"output", r.text}});
  return r;
}

LexiconCandidates::LexiconCandidates(lm::Lexicon lexicon, std::string id)
    : lexicon_(std::move(lexicon)), id_(std::move(id)) {}

std::vector<std::string> LexiconCandidates::candidates(std::string_view, const text::Token& word,
                                                       std::size_t top_k) const {
  auto it = lexicon_.find(word.text);
  if (it == lexicon_.end()) return {};
  return clean_candidates(it->second, word.text, top_k);
}

RewriterCandidates::RewriterCandidates(const lm::Rewriter& rewriter, std::uint64_t seed)
    : rewriter_(rewriter), seed_(seed) {}

std::string RewriterCandidates::prompt(std::string_view sentence, std::string_view word, std::size_t top_k) {
  std::string p = "List up to " + std::to_string(top_k) + " single-word replacements for the word \"";
  p += word;
  p += "\" as it is used in the sentence below. Answer with the words only, separated by commas.\n\nSentence: ";
  p += sentence;
  return p;
}

std::vector<std::string> RewriterCandidates::parse(std::string_view completion) {
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    const auto b = cur.find_first_not_of(" \t\r\n\"'.-*0123456789)");
    const auto e = cur.find_last_not_of(" \t\r\n\"'.");
    if (b != std::string::npos && e != std::string::npos && e >= b) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (char c : completion) {
    if (c == ',' || c == '\n' || c == ';') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::vector<std::string> RewriterCandidates::candidates(std::string_view sentence, const text::Token& word,
                                                        std::size_t top_k) const {
  lm::RewriteRequest req;
  req.text = std::string(sentence);
  req.instruction = prompt(sentence, word.text, top_k);
  req.max_tokens = 64;
  req.seed = seed_;
  return clean_candidates(parse(rewriter_.rewrite(req)), word.text, top_k);
}

std::size_t raft_budget(std::size_t word_count, double proportion) {
  if (!(proportion > 0.0 && proportion <= 1.0)) throw InputError("RAFT proportion must lie in (0, 1]");
  if (word_count == 0) return 0;
  // The epsilon keeps products such as 0.15 * 100 = 15.000000000000002 at 15.
  const double raw = std::ceil(proportion * static_cast<double>(word_count) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, word_count);
}

RaftAttack::RaftAttack(const detectors::TextDetector& proxy, const CandidateGenerator& generator, RaftParams params,
                       std::optional<QpaSettings> qpa)
    : proxy_(proxy), generator_(generator), params_(params), qpa_(std::move(qpa)) {
  raft_budget(1, params_.proportion);
  if (params_.top_k == 0) throw InputError("RAFT top_k must be positive");
  if (qpa_) qpa::validate(qpa_->constraints);
}

json RaftAttack::params() const {
  json j = {{"proportion", params_.proportion},
            {"top_k", params_.top_k},
            {"seed", params_.seed},
            {"proxy", proxy_.id()},
            {"candidates", generator_.id()}};
  if (qpa_) j["qpa"] = qpa::to_json(qpa_->constraints);
  return j;
}

AttackResult RaftAttack::do_apply(std::string_view input, const SegmentContext&) const {
  AttackResult r;
  r.text = std::string(input);
  const auto words = word_tokens(input);
  if (words.empty()) {
    r.no_op = true;
    return r;
  }
  const double base = proxy_.mgt_score(input);
  std::vector<std::pair<double, std::size_t>> importance;
  importance.reserve(words.size());
  json imp = json::array();
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string without = text::delete_token(input, words[i]);
    const double delta = blank(without) ? 0.0 : base - proxy_.mgt_score(without);
    importance.emplace_back(delta, i);
    imp.push_back({{"index", i}, {"word", words[i].text}, {"delta", delta}});
  }
  std::stable_sort(importance.begin(), importance.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t budget = raft_budget(words.size(), params_.proportion);
  json selected = json::array();
  for (std::size_t k = 0; k < budget; ++k) selected.push_back(importance[k].second);
  r.trace.push_back({{"phase", "importance"}, {"base_score", base}, {"importance", imp}, {"selected", selected}});

  double current = base;
  bool changed = false;
  for (std::size_t k = 0; k < budget; ++k) {
    const std::size_t index = importance[k].second;
    // Candidates are single words, so word positions never shift.
    const auto tok = word_tokens(r.text).at(index);
    const auto [sb, se] = sentence_around(r.text, tok.begin);
    const std::string sentence = r.text.substr(sb, se - sb);
    const auto cands = generator_.candidates(sentence, tok, params_.top_k);

    json step = {{"phase", "substitute"}, {"word_index", index}, {"word", tok.text}, {"score_before", current}};
    std::vector<std::string> texts;
    std::vector<std::optional<double>> scores(cands.size());
    for (const auto& c : cands) texts.push_back(text::replace_token(r.text, tok, c));
    const auto score_of = [&](std::size_t i) {
      if (!scores[i]) scores[i] = proxy_.mgt_score(texts[i]);
      return *scores[i];
    };

    std::optional<std::size_t> best;
    if (!cands.empty() && qpa_) {
      std::vector<std::string> sentences;
      text::Token local = tok;
      local.begin -= sb;
      local.end -= sb;
      for (const auto& c : cands) sentences.push_back(text::replace_token(sentence, local, c));
      const auto decision = qpa::qpa_filter_word_candidates(sentence, sentences, qpa_->constraints, qpa_->backends,
                                                            [&](std::size_t i) { return score_of(i); });
      json checks = json::array();
      for (const auto& c : decision.checks) checks.push_back(qpa::to_json(c));
      step["qpa"] = checks;
      best = decision.chosen;
    } else {
      for (std::size_t i = 0; i < cands.size(); ++i) {
        if (!best || score_of(i) < score_of(*best)) best = i;
      }
    }
    json listed = json::array();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      listed.push_back({{"candidate", cands[i]}, {"score", scores[i] ? json(*scores[i]) : json(nullptr)}});
    }
    step["candidates"] = listed;
    if (best && score_of(*best) < current) {
      step["chosen"] = cands[*best];
      step["sentence_before"] = sentence;
      const std::string after = texts[*best];
      const auto [ab, ae] = sentence_around(after, tok.begin);
      step["sentence_after"] = after.substr(ab, ae - ab);
      current = score_of(*best);
      r.text = after;
      changed = true;
    } else {
      step["chosen"] = nullptr;
    }
    step["score_after"] = current;
    r.trace.push_back(std::move(step));
  }
  r.no_op = !changed;
  return r;
}

HmgcAttack::HmgcAttack(const detectors::TextDetector& surrogate, const CandidateGenerator& synonyms, HmgcParams params)
    : surrogate_(surrogate), synonyms_(synonyms), params_(std::move(params)) {
  if (surrogate_.direction() != detectors::Direction::higher_is_mgt) {
    throw InputError("HMGC surrogate must score P(machine)");
  }
  if (params_.top_k == 0) throw InputError("HMGC top_k must be positive");
  if (params_.regime != "standard" && params_.regime != "mismatched") {
    throw InputError("unknown HMGC regime '" + params_.regime + "'");
  }
}

json HmgcAttack::params() const {
  return {{"max_iters", params_.max_iters}, {"top_k", params_.top_k},     {"seed", params_.seed},
          {"regime", params_.regime},       {"surrogate", surrogate_.id()}, {"synonyms", synonyms_.id()}};
}

AttackResult HmgcAttack::do_apply(std::string_view input, const SegmentContext&) const {
  AttackResult r;
  r.text = std::string(input);
  const std::size_t n_words = word_tokens(input).size();
  std::vector<bool> locked(n_words, false);
  bool any_synonym = false;
  bool changed = false;
  double p = surrogate_.score(r.text);
  std::string stop = "budget";
  for (std::size_t iter = 0;; ++iter) {
    if (p < 0.5) {
      stop = "below_threshold";
      break;
    }
    if (iter >= params_.max_iters) break;
    const auto words = word_tokens(r.text);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (locked[i]) continue;
      const std::string without = text::delete_token(r.text, words[i]);
      ranked.emplace_back(blank(without) ? 0.0 : p - surrogate_.score(without), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    bool applied = false;
    for (const auto& [drop, index] : ranked) {
      const auto& tok = words[index];
      const auto [sb, se] = sentence_around(r.text, tok.begin);
      const auto cands = synonyms_.candidates(std::string_view(r.text).substr(sb, se - sb), tok, params_.top_k);
      if (cands.empty()) continue;
      any_synonym = true;
      std::optional<std::size_t> best;
      double best_p = p;
      std::string best_text;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        auto t = text::replace_token(r.text, tok, cands[c]);
        const double q = surrogate_.score(t);
        if (q < best_p) {
          best_p = q;
          best = c;
          best_text = std::move(t);
        }
      }
      if (!best) continue;
      r.trace.push_back({{"iteration", iter},
                         {"word_index", index},
                         {"word", tok.text},
                         {"importance", drop},
                         {"replacement", cands[*best]},
                         {"probability_before", p},
                         {"probability_after", best_p}});
      r.text = std::move(best_text);
      p = best_p;
      locked[index] = true;
      applied = true;
      changed = true;
      break;
    }
    if (!applied) {
      stop = any_synonym ? "no_improvement" : "no_synonyms";
      break;
    }
  }
  r.trace.push_back({{"stop", stop}, {"probability", p}});
  r.no_op = !changed;
  return r;
}

void require_shared_vocabulary(std::span<const lm::LanguageModel* const> backends) {
  if (backends.empty()) throw InputError("token blending needs at least one backend");
  const auto& first = backends[0]->descriptor();
  if (!first.vocab_fingerprint) throw InputError("backend '" + first.id + "' has no vocabulary fingerprint");
  for (const auto* b : backends) {
    const auto& d = b->descriptor();
    if (d.vocab_fingerprint != first.vocab_fingerprint) {
      throw InputError("backends '" + first.id + "' and '" + d.id + "' have different vocabularies");
    }
  }
}

ToblendAttack::ToblendAttack(std::vector<const lm::LanguageModel*> backends, ToblendParams params,
                             std::optional<QpaSettings> qpa)
    : backends_(std::move(backends)), params_(params), qpa_(std::move(qpa)) {
  for (const auto* b : backends_) {
    if (b == nullptr) throw InputError("null blending backend");
  }
  require_shared_vocabulary(backends_);
  if (qpa_) qpa::validate(qpa_->constraints);
}

json ToblendAttack::params() const {
  json ids = json::array();
  for (const auto* b : backends_) ids.push_back(b->descriptor().id);
  json j = {{"backends", ids},
            {"prefix_tokens", params_.prefix_tokens},
            {"length", params_.length},
            {"seed", params_.seed}};
  if (qpa_) j["qpa"] = qpa::to_json(qpa_->constraints);
  return j;
}

namespace {

std::string sample_content_token(const lm::TokenDistribution& dist, double u) {
  lm::TokenDistribution d = dist;
  std::erase_if(d.entries, [](const lm::TokenLogprob& e) {
    return e.token == lm::kUnknownToken || e.token == lm::kBosToken;
  });
  if (d.entries.empty()) throw BackendError("next-token distribution has no content tokens");
  return lm::sample_token(d, u);
}

}  // namespace

AttackResult ToblendAttack::generate(std::span<const std::string> prefix, std::size_t length,
                                     std::string_view original) const {
  Rng rng(params_.seed);
  std::vector<std::string> tokens(prefix.begin(), prefix.end());
  AttackResult r;
  for (std::size_t step = 0; step < length; ++step) {
    const std::string context = text::detokenize(tokens);
    const std::size_t pick = rng.below(backends_.size());
    json entry = {{"step", step}};
    if (!qpa_) {
      const auto dist = backends_[pick]->next_token_distribution(context);
      tokens.push_back(sample_content_token(dist, rng.uniform()));
      entry["backend"] = backends_[pick]->descriptor().id;
    } else {
      std::vector<qpa::TokenCandidate> cands;
      for (const auto* b : backends_) {
        const auto dist = b->next_token_distribution(context);
        cands.push_back({b->descriptor().id, sample_content_token(dist, rng.uniform())});
      }
      const std::string reference = original.empty() ? std::string() : text::truncate_tokens(original, tokens.size() + 1);
      qpa::TokenDecision d;
      if (reference.empty()) {
        d.chosen = pick;
        d.fallback = true;
      } else {
        d = qpa::qpa_select_token(tokens, reference, cands, qpa_->constraints, qpa_->backends, pick);
      }
      json checks = json::array();
      for (const auto& c : d.checks) checks.push_back(qpa::to_json(c));
      json cand_list = json::array();
      for (const auto& c : cands) cand_list.push_back({{"backend", c.backend_id}, {"token", c.token}});
      entry["backend"] = cands[d.chosen].backend_id;
      entry["host_backend"] = cands[pick].backend_id;
      entry["candidates"] = cand_list;
      entry["fallback"] = d.fallback;
      entry["original"] = reference;
      entry["original_ppl"] = d.original_ppl;
      entry["checks"] = checks;
      tokens.push_back(cands[d.chosen].token);
    }
    entry["token"] = tokens.back();
    r.trace.push_back(std::move(entry));
  }
  r.text = text::detokenize(tokens);
  return r;
}

AttackResult ToblendAttack::do_apply(std::string_view input, const SegmentContext&) const {
  const auto all = text::token_strings(input);
  const std::size_t keep = std::min(params_.prefix_tokens, all.size());
  std::size_t length = params_.length;
  if (length == 0) length = all.size() > keep ? all.size() - keep : 1;
  const std::vector<std::string> prefix(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
  return generate(prefix, length, input);
}

std::vector<std::string> attack_names() {
  return {"dipper", "recursion", "prompt", "raft", "hmgc", "toblend", "identity"};
}

bool is_registered(const std::string& name) {
  const auto names = attack_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<Attack> make_attack(const std::string& name, const json& params, const AttackResources& res) {
  const auto need = [&](const void* p, const char* what) {
    if (p == nullptr) throw InputError("attack '" + name + "' needs a " + what);
  };
  const json& j = params.is_null() ? json::object() : params;
  if (name == "identity") return std::make_unique<IdentityAttack>();
  if (name == "dipper") {
    need(res.rewriter, "rewriter");
    return std::make_unique<ParaphraseAttack>(*res.rewriter, paraphrase_params_from_json(j));
  }
  if (name == "recursion") {
    need(res.rewriter, "rewriter");
    return std::make_unique<RecursionAttack>(*res.rewriter, j.value("depth", 5), paraphrase_params_from_json(j));
  }
  if (name == "prompt") {
    need(res.rewriter, "rewriter");
    return std::make_unique<PromptAttack>(*res.rewriter, j.value("template", std::string("default")),
                                          res.qpa.has_value(), j.value("temperature", 0.0),
                                          read_seed(j).value_or(0));
  }
  if (name == "raft") {
    need(res.proxy, "proxy detector");
    need(res.candidates, "candidate generator");
    RaftParams p;
    p.proportion = j.value("proportion", p.proportion);
    p.top_k = j.value("top_k", p.top_k);
    p.seed = read_seed(j).value_or(p.seed);
    return std::make_unique<RaftAttack>(*res.proxy, *res.candidates, p, res.qpa);
  }
  if (name == "hmgc") {
    need(res.surrogate, "surrogate detector");
    need(res.candidates, "synonym source");
    HmgcParams p;
    p.max_iters = j.value("max_iters", p.max_iters);
    p.top_k = j.value("top_k", p.top_k);
    p.seed = read_seed(j).value_or(p.seed);
    p.regime = j.value("regime", p.regime);
    return std::make_unique<HmgcAttack>(*res.surrogate, *res.candidates, p);
  }
  if (name == "toblend") {
    ToblendParams p;
    p.prefix_tokens = j.value("prefix_tokens", p.prefix_tokens);
    p.length = j.value("length", p.length);
    p.seed = read_seed(j).value_or(p.seed);
    return std::make_unique<ToblendAttack>(res.blend_backends, p, res.qpa);
  }
  throw InputError("unknown attack '" + name + "'");
}

}  // namespace evadebench::attacks
