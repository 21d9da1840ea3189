#include "evadebench/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/text.hpp"

namespace evadebench::lm {

using nlohmann::json;

namespace {
constexpr std::string_view kFormat = "evadebench-ngram";
constexpr int kFormatVersion = 1;
}  // namespace

std::uint64_t vocabulary_fingerprint(std::span<const std::string> sorted_vocab) {
  std::uint64_t h = fnv1a("vocab");
  for (const auto& t : sorted_vocab) {
    h = fnv1a(t, h);
    h = fnv1a(std::string_view("\0", 1), h);
  }
  return h;
}

NgramModel NgramModel::train(const Corpus& corpus, const NgramOptions& options) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus) texts.push_back(s.text);
  return train_texts(texts, options);
}

NgramModel NgramModel::train_texts(std::span<const std::string> texts, const NgramOptions& options) {
  if (options.order < 1 || options.order > 3) throw InputError("n-gram order must be 1, 2 or 3");
  NgramModel m;
  m.order_ = options.order;
  m.has_unk_ = options.add_unk;

  std::vector<std::vector<std::string>> docs;
  std::size_t n_tokens = 0;
  for (const auto& t : texts) {
    docs.push_back(text::token_strings(t));
    n_tokens += docs.back().size();
  }
  if (n_tokens == 0) throw InputError("n-gram training corpus is empty after tokenization");

  std::set<std::string> vocab;
  if (options.vocabulary) {
    vocab.insert(options.vocabulary->begin(), options.vocabulary->end());
  } else {
    for (const auto& d : docs) vocab.insert(d.begin(), d.end());
  }
  if (options.add_unk) vocab.insert(std::string(kUnknownToken));
  m.vocab_.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_[m.vocab_[i]] = static_cast<std::int32_t>(i);

  for (const auto& d : docs) {
    std::vector<std::string> history;
    for (const auto& tok : d) {
      const std::string mapped = m.map_token(tok);
      auto& cc = m.counts_[m.context_of(history)];
      cc.total += 1;
      cc.next[m.index_.at(mapped)] += 1;
      history.push_back(mapped);
    }
  }
  m.finalize(options.id);
  return m;
}

void NgramModel::finalize(std::string id) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::ngram_reference;
  descriptor_.vocab_size = vocab_.size();
  descriptor_.vocab_fingerprint = vocabulary_fingerprint(vocab_);
}

std::string NgramModel::map_token(std::string_view token) const {
  if (index_.count(std::string(token))) return std::string(token);
  if (has_unk_) return std::string(kUnknownToken);
  throw BackendError("token '" + std::string(token) + "' is outside the vocabulary of '" + descriptor_.id + "'");
}

std::int32_t NgramModel::index_of(std::string_view token) const { return index_.at(map_token(token)); }

NgramModel::Context NgramModel::context_of(std::span<const std::string> history) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  Context ctx(width, -1);
  const std::size_t take = std::min(width, history.size());
  for (std::size_t k = 0; k < take; ++k) {
    ctx[width - take + k] = index_of(history[history.size() - take + k]);
  }
  return ctx;
}

TokenDistribution NgramModel::distribution_for(const Context& ctx) const {
  std::uint64_t total = 0;
  const std::map<std::int32_t, std::uint64_t>* next = nullptr;
  if (auto it = counts_.find(ctx); it != counts_.end()) {
    total = it->second.total;
    next = &it->second.next;
  }
  const double log_denominator = std::log(static_cast<double>(total + vocab_.size()));
  TokenDistribution d;
  d.entries.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    std::uint64_t c = 0;
    if (next) {
      if (auto jt = next->find(static_cast<std::int32_t>(i)); jt != next->end()) c = jt->second;
    }
    d.entries.push_back({vocab_[i], std::log(static_cast<double>(c + 1)) - log_denominator});
  }
  d.canonicalize();
  return d;
}

double NgramModel::probability(std::span<const std::string> history, std::string_view token) const {
  const Context ctx = context_of(history);
  const std::int32_t w = index_of(token);
  std::uint64_t total = 0;
  std::uint64_t c = 0;
  if (auto it = counts_.find(ctx); it != counts_.end()) {
    total = it->second.total;
    if (auto jt = it->second.next.find(w); jt != it->second.next.end()) c = jt->second;
  }
  return static_cast<double>(c + 1) / static_cast<double>(total + vocab_.size());
}

TokenDistribution NgramModel::distribution_after(std::span<const std::string> history) const {
  return distribution_for(context_of(history));
}

TokenDistribution NgramModel::do_next_token_distribution(std::string_view prefix) const {
  const auto history = text::token_strings(prefix);
  return distribution_after(history);
}

std::vector<PositionDistribution> NgramModel::do_position_distributions(std::string_view input) const {
  const auto tokens = text::token_strings(input);
  std::vector<PositionDistribution> out;
  out.reserve(tokens.size());
  std::vector<std::string> history;
  for (const auto& surface : tokens) {
    PositionDistribution pos;
    pos.surface = surface;
    pos.token = map_token(surface);
    pos.dist = distribution_after(history);
    pos.logprob = *pos.dist.logprob_of(pos.token);
    history.push_back(pos.token);
    out.push_back(std::move(pos));
  }
  return out;
}

std::vector<std::string> NgramModel::sample(std::span<const std::string> history, std::size_t n,
                                            Rng& rng) const {
  std::vector<std::string> ctx(history.begin(), history.end());
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dist = distribution_after(ctx);
    out.push_back(sample_token(dist, rng.uniform()));
    ctx.push_back(out.back());
  }
  return out;
}

std::string NgramModel::serialize() const {
  json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["id"] = descriptor_.id;
  j["order"] = order_;
  j["add_unk"] = has_unk_;
  j["vocab"] = vocab_;
  json contexts = json::array();
  for (const auto& [ctx, cc] : counts_) {
    json c;
    json names = json::array();
    for (auto idx : ctx) names.push_back(idx < 0 ? std::string(kBosToken) : vocab_[idx]);
    c["context"] = names;
    c["total"] = cc.total;
    json next = json::array();
    for (const auto& [w, n] : cc.next) next.push_back(json::array({vocab_[w], n}));
    c["next"] = next;
    contexts.push_back(c);
  }
  j["contexts"] = contexts;
  return j.dump() + "\n";
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write n-gram model " + path.string());
  out << serialize();
}

NgramModel NgramModel::deserialize(const std::string& data) {
  json j;
  try {
    j = json::parse(data);
  } catch (const json::exception& e) {
    throw InputError(std::string("n-gram model is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw InputError("not an n-gram model file");
    if (j.at("version").get<int>() != kFormatVersion) {
      throw InputError("unsupported n-gram model version " + std::to_string(j.at("version").get<int>()));
    }
    NgramModel m;
    m.order_ = j.at("order").get<int>();
    if (m.order_ < 1 || m.order_ > 3) throw InputError("n-gram order must be 1, 2 or 3");
    m.has_unk_ = j.at("add_unk").get<bool>();
    m.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    if (!std::is_sorted(m.vocab_.begin(), m.vocab_.end())) throw InputError("n-gram vocabulary is not sorted");
    for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_[m.vocab_[i]] = static_cast<std::int32_t>(i);
    for (const auto& c : j.at("contexts")) {
      Context ctx;
      for (const auto& name : c.at("context")) {
        const auto s = name.get<std::string>();
        ctx.push_back(s == kBosToken ? -1 : m.index_.at(s));
      }
      if (ctx.size() != static_cast<std::size_t>(m.order_ - 1)) throw InputError("context width mismatch");
      ContextCounts cc;
      cc.total = c.at("total").get<std::uint64_t>();
      for (const auto& pair : c.at("next")) {
        cc.next[m.index_.at(pair.at(0).get<std::string>())] = pair.at(1).get<std::uint64_t>();
      }
      m.counts_[ctx] = std::move(cc);
    }
    m.finalize(j.at("id").get<std::string>());
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed n-gram model: ") + e.what());
  } catch (const std::out_of_range&) {
    throw InputError("n-gram model references a token outside its vocabulary");
  }
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open n-gram model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

bool NgramModel::operator==(const NgramModel& o) const {
  if (order_ != o.order_ || has_unk_ != o.has_unk_ || vocab_ != o.vocab_ || descriptor_.id != o.descriptor_.id) {
    return false;
  }
  if (counts_.size() != o.counts_.size()) return false;
  for (auto a = counts_.begin(), b = o.counts_.begin(); a != counts_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.total != b->second.total || a->second.next != b->second.next) return false;
  }
  return true;
}

}  // namespace evadebench::lm
