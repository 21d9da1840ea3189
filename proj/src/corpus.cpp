#include "evadebench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/random.hpp"

namespace evadebench {

using nlohmann::json;

std::string to_string(Label label) { return label == Label::human ? "human" : "machine"; }

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::unassigned:
      break;
  }
  return "unassigned";
}

Label parse_label(const std::string& s) {
  if (s == "human") return Label::human;
  if (s == "machine") return Label::machine;
  throw InputError("unknown label '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  throw InputError("unknown split '" + s + "'");
}

void validate(const TextSample& s) {
  if (s.id.empty()) throw InputError("sample has an empty id");
  if (s.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
    throw InputError("sample '" + s.id + "' has empty text");
  }
  if (s.label == Label::machine && !s.generator) {
    throw InputError("machine sample '" + s.id + "' has no generator");
  }
  if (s.label == Label::human && s.generator) {
    throw InputError("human sample '" + s.id + "' has a generator");
  }
}

json to_json(const TextSample& s) {
  json j;
  j["id"] = s.id;
  j["text"] = s.text;
  j["label"] = to_string(s.label);
  j["generator"] = s.generator ? json(*s.generator) : json(nullptr);
  j["dataset"] = s.dataset;
  j["domain"] = s.domain;
  j["split"] = to_string(s.split);
  return j;
}

TextSample sample_from_json(const json& j) {
  if (!j.is_object()) throw InputError("record is not a JSON object");
  auto field = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw InputError(std::string("missing field '") + key + "'");
    return *it;
  };
  auto str = [&](const char* key) {
    const json& v = field(key);
    if (!v.is_string()) throw InputError(std::string("field '") + key + "' is not a string");
    return v.get<std::string>();
  };
  TextSample s;
  s.id = str("id");
  s.text = str("text");
  s.label = parse_label(str("label"));
  auto g = j.find("generator");
  if (g != j.end() && !g->is_null()) {
    if (!g->is_string()) throw InputError("field 'generator' is not a string");
    s.generator = g->get<std::string>();
  }
  s.dataset = str("dataset");
  s.domain = str("domain");
  s.split = parse_split(str("split"));
  validate(s);
  return s;
}

Corpus::Corpus(std::string name, std::vector<TextSample> samples, std::uint64_t split_seed)
    : name_(std::move(name)), samples_(std::move(samples)), split_seed_(split_seed) {
  std::unordered_set<std::string> ids;
  for (const auto& s : samples_) {
    validate(s);
    if (!ids.insert(s.id).second) throw InputError("duplicate id '" + s.id + "'");
  }
}

const TextSample* Corpus::find(const std::string& id) const {
  for (const auto& s : samples_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

Corpus ingest_stream(std::istream& in, std::string name, bool keep_splits) {
  std::vector<TextSample> samples;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      TextSample s = sample_from_json(json::parse(line));
      if (!keep_splits) s.split = Split::unassigned;
      if (!ids.insert(s.id).second) throw InputError("duplicate id '" + s.id + "'");
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw InputError("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Corpus(std::move(name), std::move(samples));
}

Corpus ingest(const std::filesystem::path& path, std::string name, bool keep_splits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  if (name.empty()) name = path.stem().string();
  return ingest_stream(in, std::move(name), keep_splits);
}

void serialize(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus) out << to_json(s).dump() << '\n';
}

void serialize(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write corpus file " + path.string());
  serialize(corpus, out);
}

std::string stratum_key(const TextSample& s) {
  return s.dataset + '\x1f' + (s.generator ? *s.generator : std::string("\x1ehuman"));
}

Corpus assign_splits(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split ratio must be in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[stratum_key(corpus[i])].push_back(i);

  std::vector<TextSample> samples = corpus.samples();
  for (auto& [key, members] : strata) {
    if (members.size() < 2) {
      throw InputError("stratum '" + key + "' has fewer than 2 samples");
    }
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
    Rng rng(mix_seed(seed, fnv1a(key)));
    rng.shuffle(std::span<std::size_t>(members));
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) {
      samples[members[k]].split = k < n_train ? Split::train : Split::test;
    }
  }
  return Corpus(corpus.name(), std::move(samples), seed);
}

bool SampleFilter::matches(const TextSample& s) const {
  if (dataset && s.dataset != *dataset) return false;
  if (generator && s.generator != *generator) return false;
  if (label && s.label != *label) return false;
  if (split && s.split != *split) return false;
  return true;
}

Corpus filter(const Corpus& corpus, const SampleFilter& f) {
  return filter(corpus, [&](const TextSample& s) { return f.matches(s); });
}

Corpus filter(const Corpus& corpus, const std::function<bool(const TextSample&)>& pred) {
  std::vector<TextSample> out;
  for (const auto& s : corpus) {
    if (pred(s)) out.push_back(s);
  }
  return Corpus(corpus.name(), std::move(out), corpus.split_seed());
}

}  // namespace evadebench
