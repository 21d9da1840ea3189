#include "evadebench/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "evadebench/detectors.hpp"
#include "evadebench/errors.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/random.hpp"
#include "evadebench/text.hpp"

namespace evadebench::synthetic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aiou";

std::string invent_word(Rng& rng, int syllables) {
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w += kConsonants[rng.below(kConsonants.size())];
    w += kVowels[rng.below(kVowels.size())];
  }
  if (rng.bernoulli(0.5)) w += kConsonants[rng.below(kConsonants.size())];
  return w;
}

struct Language {
  std::vector<std::array<std::string, 2>> spellings;
  std::vector<std::vector<std::size_t>> next;
  std::vector<std::vector<double>> weights;
};

Language build_language(const SyntheticOptions& o, Rng& rng) {
  if (o.concepts < 2 || o.successors == 0 || o.successors > o.concepts) {
    throw InputError("synthetic language needs at least 2 concepts and 1..concepts successors");
  }
  Language lang;
  std::set<std::string> used;
  for (std::size_t c = 0; c < o.concepts; ++c) {
    const int syl = 1 + static_cast<int>(rng.below(3));
    std::array<std::string, 2> pair;
    for (auto& s : pair) {
      do {
        s = invent_word(rng, syl);
      } while (s.size() < 3 || used.count(s) || quality::count_syllables(s) != syl);
      used.insert(s);
    }
    lang.spellings.push_back(pair);
  }
  for (std::size_t c = 0; c < o.concepts; ++c) {
    std::vector<std::size_t> all(o.concepts);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(std::span(all));
    all.resize(o.successors);
    std::vector<double> w;
    for (std::size_t i = 0; i < all.size(); ++i) w.push_back(0.2 + rng.uniform());
    lang.next.push_back(all);
    lang.weights.push_back(w);
  }
  return lang;
}

std::size_t pick(const std::vector<double>& w, double u) {
  double total = 0.0;
  for (double x : w) total += x;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i] / total;
    if (u < acc) return i;
  }
  return w.size() - 1;
}

std::string capitalize_sentences(const std::vector<std::string>& tokens) {
  std::vector<std::string> t = tokens;
  bool start = true;
  for (auto& tok : t) {
    if (start && !tok.empty() && !text::is_punctuation_token(tok)) {
      tok[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
      start = false;
    }
    if (tok == ".") start = true;
  }
  return text::detokenize(t);
}

}  // namespace

std::vector<std::string> seed_language(const SyntheticOptions& o, std::vector<std::string>* words,
                                       lm::Lexicon* lexicon) {
  Rng rng(mix_seed(o.seed, 1));
  const auto lang = build_language(o, rng);
  if (words) {
    words->clear();
    for (const auto& p : lang.spellings) words->insert(words->end(), p.begin(), p.end());
    std::sort(words->begin(), words->end());
  }
  if (lexicon) {
    lexicon->clear();
    for (std::size_t c = 0; c < lang.spellings.size(); ++c) {
      for (int k = 0; k < 2; ++k) {
        std::vector<std::string> alts = {lang.spellings[c][1 - k]};
        for (int extra = 0; extra < 3; ++extra) {
          const std::size_t other = (c + 1 + rng.below(lang.spellings.size() - 1)) % lang.spellings.size();
          alts.push_back(lang.spellings[other][rng.below(2)]);
        }
        (*lexicon)[lang.spellings[c][k]] = alts;
      }
    }
  }
  std::vector<std::string> docs;
  for (std::size_t d = 0; d < o.seed_documents; ++d) {
    std::vector<std::string> toks;
    std::size_t c = rng.below(lang.spellings.size());
    while (toks.size() < o.seed_tokens) {
      toks.push_back(lang.spellings[c][rng.below(2)]);
      if (rng.bernoulli(o.sentence_end)) {
        toks.push_back(".");
        c = rng.below(lang.spellings.size());
      } else {
        c = lang.next[c][pick(lang.weights[c], rng.uniform())];
      }
    }
    if (toks.back() != ".") toks.push_back(".");
    docs.push_back(capitalize_sentences(toks));
  }
  return docs;
}

SyntheticBundle make_synthetic(const SyntheticOptions& o) {
  if (o.min_tokens == 0 || o.max_tokens < o.min_tokens) throw InputError("invalid synthetic length range");
  std::vector<std::string> words;
  lm::Lexicon lexicon;
  auto seed_docs = seed_language(o, &words, &lexicon);
  lm::NgramOptions copt;
  copt.order = 2;
  copt.add_unk = true;
  copt.id = "synthetic-bigram";
  auto companion = lm::NgramModel::train_texts(seed_docs, copt);
  Rng noise_rng(mix_seed(o.seed, 3));
  for (std::size_t i = 0; i < o.noise_documents && i < o.seed_documents; ++i) {
    auto toks = text::token_strings(seed_docs[i]);
    noise_rng.shuffle(std::span(toks));
    seed_docs.push_back(capitalize_sentences(toks));
  }
  lm::NgramOptions nopt;
  nopt.order = o.order;
  nopt.add_unk = true;
  nopt.id = "synthetic-ngram";
  auto model = lm::NgramModel::train_texts(seed_docs, nopt);

  Rng rng(mix_seed(o.seed, 2));
  const auto draw = [&]() {
    const std::size_t n = o.min_tokens + rng.below(o.max_tokens - o.min_tokens + 1);
    std::vector<std::string> toks;
    while (toks.size() < n) {
      const auto dist = model.distribution_after(toks);
      lm::TokenDistribution d = dist;
      std::erase_if(d.entries, [](const lm::TokenLogprob& e) { return e.token == lm::kUnknownToken; });
      toks.push_back(lm::sample_token(d, rng.uniform()));
    }
    return toks;
  };
  std::vector<TextSample> samples;
  for (std::size_t i = 0; i < o.n_machine; ++i) {
    TextSample s;
    s.id = "m" + std::to_string(i);
    s.text = capitalize_sentences(draw());
    s.label = Label::machine;
    s.generator = o.generator;
    s.dataset = o.dataset;
    s.domain = "synthetic";
    samples.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < o.n_human; ++i) {
    auto toks = draw();
    rng.shuffle(std::span(toks));
    TextSample s;
    s.id = "h" + std::to_string(i);
    s.text = capitalize_sentences(toks);
    s.label = Label::human;
    s.dataset = o.dataset;
    s.domain = "synthetic";
    samples.push_back(std::move(s));
  }
  return {Corpus(o.dataset, std::move(samples)), std::move(model), std::move(companion), std::move(lexicon), std::move(words)};
}

namespace {

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

}  // namespace

json write_benchmark(const fs::path& dir, const SyntheticOptions& o) {
  const auto b = make_synthetic(o);
  const std::uint64_t seed = o.seed;
  fs::create_directories(dir);
  serialize(b.corpus, dir / "corpus.jsonl");
  b.model.save(dir / "model.json");
  b.companion.save(dir / "bigram.json");
  json lex = json::object();
  for (const auto& [w, alts] : b.lexicon) lex[w] = alts;
  write_json(dir / "lexicon.json", lex);

  json config = {
      {"seed", seed},
      {"split_ratio", 0.8},
      {"datasets", {{{"name", o.dataset}, {"path", "corpus.jsonl"}}}},
      {"backends",
       {{"models", {{"reference", {{"type", "ngram"}, {"path", "model.json"}}}, {"bigram", {{"type", "ngram"}, {"path", "bigram.json"}}}}},
        {"scoring", "reference"},
        {"fast_reference", "bigram"},
        {"binoculars_observer", "reference"},
        {"binoculars_performer", "bigram"},
        {"quality", "reference"},
        {"blend", {"reference", "bigram"}},
        {"rewriter", {{"type", "lexicon"}, {"lexicon_path", "lexicon.json"}, {"probability", 0.5}}},
        {"embedder", {{"type", "hashing"}, {"dimension", 1024}}},
        {"candidates", {{"type", "lexicon"}, {"lexicon_path", "lexicon.json"}}}}},
      {"detectors", detectors::metric_detector_names()},
      {"qpa", false},
      {"overhead", {{"targets", {100}}, {"per_bucket_cap", 5}}},
  };
  config["attacks"] = json::object();
  config["attacks"]["dipper"] = json::object();
  config["attacks"]["raft"] = json::object();
  write_json(dir / "config.json", config);
  return {{"dir", dir.string()}, {"samples", b.corpus.size()}, {"config", (dir / "config.json").string()}};
}

}  // namespace evadebench::synthetic
