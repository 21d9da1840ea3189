#include "evadebench/quality.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/text.hpp"

namespace evadebench::quality {

namespace {

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : text::tokenize(s)) {
    if (t.is_word) out.push_back(std::move(t.text));
  }
  return out;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; }

}  // namespace

double perplexity(const lm::LanguageModel& backend, std::string_view t) {
  const auto st = backend.score_text(t);
  double sum = 0.0;
  for (const auto& tok : st.tokens) sum += tok.logprob;
  return std::exp(-sum / static_cast<double>(st.size()));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InputError("cosine of a zero-norm embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity(const lm::Embedder& embedder, std::string_view a, std::string_view b) {
  const auto ea = embedder.embed(a);
  if (a == b) return cosine(ea, ea);
  return cosine(ea, embedder.embed(b));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  constexpr std::size_t kStack = 64;
  std::array<std::size_t, 2 * (kStack + 1)> small{};
  std::vector<std::size_t> big;
  std::size_t* prev = small.data();
  if (b.size() > kStack) {
    big.assign(2 * (b.size() + 1), 0);
    prev = big.data();
  }
  std::size_t* cur = prev + b.size() + 1;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_tokens(std::span<const std::string> reference, std::span<const std::string> candidate) {
  if (reference.empty() || candidate.empty()) return 0.0;
  const auto lcs = lcs_length(reference, candidate);
  // 2PR/(P+R) with P = lcs/|c| and R = lcs/|r| reduces to 2*lcs/(|r|+|c|).
  return static_cast<double>(2 * lcs) / static_cast<double>(reference.size() + candidate.size());
}

double rouge_l(std::string_view reference, std::string_view candidate) {
  const auto r = words_of(reference);
  const auto c = words_of(candidate);
  return rouge_l_tokens(r, c);
}

int count_syllables(std::string_view word) {
  std::string w;
  for (char ch : word) {
    if (std::isalpha(static_cast<unsigned char>(ch))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (w.empty()) return 1;
  int groups = 0;
  bool in_group = false;
  for (char ch : w) {
    const bool v = is_vowel(ch);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
    const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
    if (!consonant_le) --groups;
  }
  return std::max(groups, 1);
}

ReadabilityCounts readability_counts(std::string_view t) {
  ReadabilityCounts c;
  const auto split = text::split_sentences(t);
  for (const auto& s : split.sentences) {
    const auto ws = words_of(s);
    if (ws.empty()) continue;
    ++c.sentences;
    c.words += ws.size();
    for (const auto& w : ws) c.syllables += static_cast<std::size_t>(count_syllables(w));
  }
  return c;
}

double flesch_reading_ease(std::string_view t) {
  const auto c = readability_counts(t);
  if (c.sentences == 0 || c.words == 0) throw InputError("text has no sentence to score");
  const double words = static_cast<double>(c.words);
  return 206.835 - 1.015 * (words / static_cast<double>(c.sentences)) -
         84.6 * (static_cast<double>(c.syllables) / words);
}

QualityReport quality_report(const TextSample& original, const AttackOutcome& outcome,
                             const lm::LanguageModel& backend, const lm::Embedder& embedder) {
  QualityReport r;
  r.sample_id = original.id;
  r.attack_id = outcome.attack_id;
  r.ppl_before = perplexity(backend, original.text);
  r.ppl_after = original.text == outcome.attacked_text ? r.ppl_before : perplexity(backend, outcome.attacked_text);
  r.cs = cosine_similarity(embedder, original.text, outcome.attacked_text);
  r.rouge_l = rouge_l(original.text, outcome.attacked_text);
  r.fre_before = flesch_reading_ease(original.text);
  r.fre_after = original.text == outcome.attacked_text ? r.fre_before : flesch_reading_ease(outcome.attacked_text);
  return r;
}

QualityAggregate aggregate(std::span<const QualityReport> reports) {
  if (reports.empty()) throw InputError("cannot aggregate zero quality reports");
  QualityAggregate a;
  a.attack_id = reports[0].attack_id;
  a.n = reports.size();
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    a.ppl_before += r.ppl_before / n;
    a.ppl_after += r.ppl_after / n;
    a.ppl_delta += r.ppl_delta() / n;
    a.abs_ppl_delta += std::abs(r.ppl_delta()) / n;
    a.cs += r.cs / n;
    a.rouge_l += r.rouge_l / n;
    a.fre_before += r.fre_before / n;
    a.fre_after += r.fre_after / n;
    a.fre_delta += r.fre_delta() / n;
    a.abs_fre_delta += std::abs(r.fre_delta()) / n;
  }
  return a;
}

nlohmann::json to_json(const QualityReport& r) {
  return {{"sample_id", r.sample_id},   {"attack_id", r.attack_id},   {"ppl_before", r.ppl_before},
          {"ppl_after", r.ppl_after},   {"ppl_delta", r.ppl_delta()}, {"cs", r.cs},
          {"rouge_l", r.rouge_l},       {"fre_before", r.fre_before}, {"fre_after", r.fre_after},
          {"fre_delta", r.fre_delta()}};
}

QualityReport quality_from_json(const nlohmann::json& j) {
  QualityReport r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.attack_id = j.at("attack_id").get<std::string>();
  r.ppl_before = j.at("ppl_before").get<double>();
  r.ppl_after = j.at("ppl_after").get<double>();
  r.cs = j.at("cs").get<double>();
  r.rouge_l = j.at("rouge_l").get<double>();
  r.fre_before = j.at("fre_before").get<double>();
  r.fre_after = j.at("fre_after").get<double>();
  return r;
}

nlohmann::json to_json(const QualityAggregate& a) {
  return {{"attack_id", a.attack_id}, {"n", a.n},
          {"ppl_before", a.ppl_before}, {"ppl_after", a.ppl_after},
          {"ppl_delta", a.ppl_delta}, {"abs_ppl_delta", a.abs_ppl_delta},
          {"cs", a.cs}, {"rouge_l", a.rouge_l},
          {"fre_before", a.fre_before}, {"fre_after", a.fre_after},
          {"fre_delta", a.fre_delta}, {"abs_fre_delta", a.abs_fre_delta}};
}

}  // namespace evadebench::quality
