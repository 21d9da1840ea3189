#include "evadebench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "evadebench/blending.hpp"
#include "evadebench/errors.hpp"
#include "evadebench/evaluation.hpp"
#include "evadebench/ngram.hpp"
#include "evadebench/overhead.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/reference.hpp"
#include "evadebench/remote.hpp"
#include "evadebench/report.hpp"

namespace evadebench::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using store::Stream;

namespace {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"ingest", "score", "attack", "quality", "eval", "overhead", "scenario", "report"};
  return c;
}

bool contains(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

lm::EndpointConfig endpoint_from_json(const json& j) {
  lm::EndpointConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.path = j.value("path", c.path);
  c.model = j.value("model", "");
  c.api_key = j.value("api_key", "");
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.max_retries = j.value("max_retries", c.max_retries);
  return c;
}

lm::Lexicon read_lexicon(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed lexicon " + path.string() + ": " + e.what());
  }
  lm::Lexicon lex;
  for (const auto& [k, v] : j.items()) lex[k] = v.get<std::vector<std::string>>();
  return lex;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto part = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) out.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

bool qpa_capable(const std::string& name) { return name == "prompt" || name == "raft" || name == "toblend"; }

}  // namespace

json to_json(const Overrides& o) {
  json j = json::object();
  if (o.dataset) j["dataset"] = *o.dataset;
  if (!o.detectors.empty()) j["detectors"] = o.detectors;
  if (!o.attacks.empty()) j["attacks"] = o.attacks;
  if (o.qpa) j["qpa"] = true;
  if (!o.blend.empty()) j["blend"] = o.blend;
  if (o.blend_policy) j["blend_policy"] = *o.blend_policy;
  if (o.seed) j["seed"] = *o.seed;
  if (o.trace) j["trace"] = true;
  return j;
}

std::vector<std::string> command_names() { return commands(); }

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed config " + path.string() + ": " + e.what());
  }
  validate_config(j);
  return j;
}

void validate_config(const json& c) {
  if (!c.is_object()) throw InputError("config must be a JSON object");
  if (!c.contains("datasets") || !c.at("datasets").is_array() || c.at("datasets").empty()) {
    throw InputError("config needs a non-empty 'datasets' list");
  }
  for (const auto& d : c.at("datasets")) {
    if (!d.contains("path")) throw InputError("every dataset needs a 'path'");
  }
  if (!c.contains("backends") || !c.at("backends").contains("scoring")) {
    throw InputError("config needs backends.scoring");
  }
  const auto& models = c.at("backends").value("models", json::object());
  for (const char* role : {"scoring", "fast_reference", "binoculars_observer", "binoculars_performer", "quality"}) {
    if (c.at("backends").contains(role)) {
      const auto id = c.at("backends").at(role).get<std::string>();
      if (!models.contains(id)) throw InputError(std::string("backends.") + role + " names unknown model '" + id + "'");
    }
  }
  for (const auto& [id, m] : models.items()) {
    const auto type = m.value("type", "");
    if (type != "ngram" && type != "remote" && type != "uniform") {
      throw InputError("model '" + id + "' has unknown type '" + type + "'");
    }
  }
  std::set<std::string> external;
  for (const auto& e : c.at("backends").value("external_detectors", json::array())) {
    external.insert(e.at("id").get<std::string>());
  }
  for (const auto& d : c.value("detectors", json::array())) {
    const auto name = d.get<std::string>();
    const auto& names = detectors::metric_detector_names();
    if (!contains(names, name) && name != "lm_d" && !external.count(name)) {
      throw InputError("unknown detector '" + name + "'");
    }
  }
  const auto attack_params = c.value("attacks", json::object());
  for (const auto& [name, params] : attack_params.items()) {
    if (!attacks::is_registered(name)) throw InputError("unknown attack '" + name + "'");
    if (!params.is_object()) throw InputError("params of attack '" + name + "' must be an object");
  }
  if (c.contains("blend") && !c.at("blend").is_null()) {
    for (const auto& a : c.at("blend").value("attacks", json::array())) {
      if (!attacks::is_registered(a.get<std::string>())) throw InputError("unknown blend attack '" + a.get<std::string>() + "'");
    }
  }
}

struct Harness::State {
  std::optional<Corpus> corpus;
  std::map<std::string, std::unique_ptr<lm::LanguageModel>> models;
  std::unique_ptr<lm::Rewriter> rewriter;
  std::unique_ptr<lm::Embedder> embedder;
  std::unique_ptr<attacks::CandidateGenerator> candidates;
  std::map<std::string, std::unique_ptr<detectors::TextDetector>> detectors;
  std::unique_ptr<detectors::HeadDetector> surrogate;
};

Harness::Harness(json config, fs::path base_dir, Overrides overrides)
    : config_(std::move(config)), base_dir_(std::move(base_dir)), overrides_(std::move(overrides)),
      state_(std::make_unique<State>()) {
  validate_config(config_);
  overrides_.detectors = split_list(overrides_.detectors);
  overrides_.attacks = split_list(overrides_.attacks);
  overrides_.blend = split_list(overrides_.blend);
  for (const auto& a : overrides_.attacks) {
    if (!attacks::is_registered(a)) throw InputError("unknown attack '" + a + "'");
  }
  for (const auto& a : overrides_.blend) {
    if (!attacks::is_registered(a)) throw InputError("unknown blend attack '" + a + "'");
  }
}

Harness::~Harness() = default;

std::uint64_t Harness::seed() const { return overrides_.seed.value_or(config_.value("seed", std::uint64_t{0})); }

std::vector<std::string> Harness::selected_detectors() const {
  if (!overrides_.detectors.empty()) return overrides_.detectors;
  return config_.value("detectors", std::vector<std::string>{"log_likelihood"});
}

std::vector<std::string> Harness::selected_attacks() const {
  if (!overrides_.attacks.empty()) return overrides_.attacks;
  std::vector<std::string> out;
  const auto configured = config_.value("attacks", json::object());
  for (const auto& [name, _] : configured.items()) out.push_back(name);
  return out;
}

const Corpus& Harness::corpus() const {
  if (!state_->corpus) throw InputError("no corpus loaded (run `ingest` first)");
  return *state_->corpus;
}

void Harness::load_corpus(const store::ResultsStore& s) {
  std::vector<TextSample> samples;
  for (const auto& r : s.read(Stream::samples)) samples.push_back(sample_from_json(r));
  state_->corpus = Corpus("ingested", std::move(samples));
}

const lm::LanguageModel& Harness::model(const std::string& id) {
  if (auto it = state_->models.find(id); it != state_->models.end()) return *it->second;
  const auto& models = config_.at("backends").value("models", json::object());
  if (!models.contains(id)) throw InputError("unknown model '" + id + "'");
  const auto& m = models.at(id);
  const auto type = m.at("type").get<std::string>();
  std::unique_ptr<lm::LanguageModel> built;
  if (type == "ngram") {
    if (m.contains("path")) {
      built = std::make_unique<lm::NgramModel>(lm::NgramModel::load(base_dir_ / m.at("path").get<std::string>()));
    } else {
      lm::NgramOptions o;
      o.order = m.value("order", 2);
      o.add_unk = m.value("add_unk", true);
      o.id = id;
      std::vector<std::string> texts;
      const auto ds = m.value("train_dataset", std::string());
      for (const auto& s : corpus().samples()) {
        if (s.split == Split::train && (ds.empty() || s.dataset == ds)) texts.push_back(s.text);
      }
      if (texts.empty()) throw InputError("model '" + id + "' has no training texts");
      built = std::make_unique<lm::NgramModel>(lm::NgramModel::train_texts(texts, o));
    }
  } else if (type == "uniform") {
    built = std::make_unique<lm::UniformModel>(m.at("vocabulary").get<std::vector<std::string>>(), id);
  } else {
    std::optional<std::uint64_t> fp;
    if (m.contains("vocab_fingerprint")) fp = m.at("vocab_fingerprint").get<std::uint64_t>();
    built = std::make_unique<lm::RemoteLanguageModel>(id, endpoint_from_json(m), m.value("top_k", std::size_t{20}), fp);
  }
  auto& ref = *built;
  state_->models[id] = std::move(built);
  return ref;
}

const lm::LanguageModel& Harness::scoring_model() { return model(config_.at("backends").at("scoring").get<std::string>()); }

const lm::LanguageModel& Harness::quality_model() {
  const auto& b = config_.at("backends");
  return b.contains("quality") ? model(b.at("quality").get<std::string>()) : scoring_model();
}

const lm::Rewriter& Harness::rewriter() {
  if (state_->rewriter) return *state_->rewriter;
  const auto r = config_.at("backends").value("rewriter", json{{"type", "identity"}});
  const auto type = r.value("type", "identity");
  if (type == "identity") {
    state_->rewriter = std::make_unique<lm::IdentityRewriter>();
  } else if (type == "lexicon") {
    state_->rewriter = std::make_unique<lm::LexiconRewriter>(read_lexicon(base_dir_ / r.at("lexicon_path").get<std::string>()),
                                                             r.value("probability", 0.3), r.value("id", "lexicon"));
  } else if (type == "remote") {
    state_->rewriter = std::make_unique<lm::RemoteRewriter>(r.value("id", "remote-rewriter"), endpoint_from_json(r));
  } else {
    throw InputError("unknown rewriter type '" + type + "'");
  }
  return *state_->rewriter;
}

const lm::Embedder& Harness::embedder() {
  if (state_->embedder) return *state_->embedder;
  const auto e = config_.at("backends").value("embedder", json{{"type", "hashing"}});
  const auto type = e.value("type", "hashing");
  if (type == "hashing") {
    state_->embedder = std::make_unique<lm::HashingEmbedder>(e.value("dimension", std::size_t{1024}));
  } else if (type == "remote") {
    auto ep = endpoint_from_json(e);
    if (!e.contains("path")) ep.path = "/v1/embeddings";
    state_->embedder = std::make_unique<lm::RemoteEmbedder>(e.value("id", "remote-embedder"), ep,
                                                            e.at("dimension").get<std::size_t>());
  } else {
    throw InputError("unknown embedder type '" + type + "'");
  }
  return *state_->embedder;
}

const attacks::CandidateGenerator& Harness::candidates() {
  if (state_->candidates) return *state_->candidates;
  const auto c = config_.at("backends").value("candidates", json{{"type", "rewriter"}});
  const auto type = c.value("type", "rewriter");
  if (type == "lexicon") {
    state_->candidates = std::make_unique<attacks::LexiconCandidates>(read_lexicon(base_dir_ / c.at("lexicon_path").get<std::string>()));
  } else if (type == "rewriter") {
    state_->candidates = std::make_unique<attacks::RewriterCandidates>(rewriter(), seed());
  } else {
    throw InputError("unknown candidate source '" + type + "'");
  }
  return *state_->candidates;
}

detectors::MetricBackends Harness::metric_backends() {
  const auto& b = config_.at("backends");
  detectors::MetricBackends mb;
  mb.scoring = &scoring_model();
  if (b.contains("fast_reference")) mb.fast_reference = &model(b.at("fast_reference").get<std::string>());
  if (b.contains("binoculars_observer")) mb.binoculars_observer = &model(b.at("binoculars_observer").get<std::string>());
  if (b.contains("binoculars_performer")) mb.binoculars_performer = &model(b.at("binoculars_performer").get<std::string>());
  return mb;
}

namespace {

struct TrainTexts {
  std::vector<std::string> human, machine;
};

TrainTexts train_texts(const Corpus& c, const std::optional<std::string>& dataset) {
  TrainTexts t;
  for (const auto& s : c.samples()) {
    if (s.split != Split::train || (dataset && s.dataset != *dataset)) continue;
    (s.label == Label::human ? t.human : t.machine).push_back(s.text);
  }
  if (t.human.empty() || t.machine.empty()) throw InputError("the train split needs human and machine samples");
  return t;
}

Corpus train_corpus(const Corpus& c, const std::optional<std::string>& dataset) {
  return filter(c, [&](const TextSample& s) { return s.split == Split::train && (!dataset || s.dataset == *dataset); });
}

}  // namespace

const detectors::TextDetector& Harness::detector(const std::string& name) {
  if (auto it = state_->detectors.find(name); it != state_->detectors.end()) return *it->second;
  std::unique_ptr<detectors::TextDetector> d;
  LogisticOptions lo;
  lo.seed = seed();
  const auto& names = detectors::metric_detector_names();
  if (name == "gltr") {
    const auto t = train_texts(corpus(), overrides_.dataset);
    d = std::make_unique<detectors::MetricClassifierDetector>(
        detectors::train_metric_classifier("gltr", metric_backends(), t.human, t.machine, lo));
  } else if (contains(names, name)) {
    d = std::make_unique<detectors::MetricDetector>(name, metric_backends());
  } else if (name == "lm_d") {
    d = std::make_unique<detectors::HeadDetector>(detectors::train_head_detector(
        train_corpus(corpus(), overrides_.dataset), embedder(), {"human", "machine"}, seed(), lo));
  } else {
    for (const auto& e : config_.at("backends").value("external_detectors", json::array())) {
      if (e.at("id").get<std::string>() != name) continue;
      detectors::ExternalDetectorRef ref{name, e.at("endpoint").get<std::string>(),
                                         detectors::parse_direction(e.value("direction", "higher_is_mgt"))};
      lm::EndpointConfig transport;
      transport.max_in_flight = e.value("max_in_flight", transport.max_in_flight);
      d = std::make_unique<detectors::ExternalDetector>(ref, transport, e.value("cache", true));
    }
    if (!d) throw InputError("unknown detector '" + name + "'");
  }
  auto& ref = *d;
  state_->detectors[name] = std::move(d);
  return ref;
}

std::unique_ptr<attacks::Attack> Harness::make_attack(const std::string& name, bool qpa) {
  if (!attacks::is_registered(name)) throw InputError("unknown attack '" + name + "'");
  json params = config_.value("attacks", json::object()).value(name, json::object());
  if (!params.contains("seed") || overrides_.seed) params["seed"] = seed();
  attacks::AttackResources res;
  if (name == "dipper" || name == "recursion" || name == "prompt") res.rewriter = &rewriter();
  if (name == "raft") {
    res.proxy = &detector(params.value("proxy", std::string("log_likelihood")));
    res.candidates = &candidates();
  }
  if (name == "hmgc") {
    if (!state_->surrogate) {
      state_->surrogate = std::make_unique<detectors::HeadDetector>(
          detectors::surrogate_for_hmgc(train_corpus(corpus(), overrides_.dataset), embedder(), seed()));
    }
    res.surrogate = state_->surrogate.get();
    res.candidates = &candidates();
    const auto attacked = filter(corpus(), [&](const TextSample& s) {
      return s.split == Split::test && (!overrides_.dataset || s.dataset == *overrides_.dataset);
    });
    params["regime"] = detectors::to_string(detectors::hmgc_regime(*state_->surrogate, attacked));
  }
  if (name == "toblend") {
    const auto& b = config_.at("backends");
    const auto ids = b.value("blend", std::vector<std::string>{b.at("scoring").get<std::string>()});
    for (const auto& id : ids) res.blend_backends.push_back(&model(id));
  }
  if (qpa && qpa_capable(name)) {
    attacks::QpaSettings q;
    const auto qc = config_.value("qpa", json(false));
    if (qc.is_object()) q.constraints = qpa::constraints_from_json(qc);
    q.backends = {&quality_model(), &embedder()};
    res.qpa = q;
  }
  return attacks::make_attack(name, params, res);
}

namespace {

std::vector<TextSample> attack_targets(const Corpus& c, const std::optional<std::string>& dataset) {
  std::vector<TextSample> out;
  for (const auto& s : c.samples()) {
    if (s.split == Split::test && s.label == Label::machine && (!dataset || s.dataset == *dataset)) out.push_back(s);
  }
  if (out.empty()) throw InputError("no machine samples in the test split to attack");
  return out;
}

}  // namespace

json Harness::ingest(store::ResultsStore& s) {
  std::vector<TextSample> all;
  std::set<std::string> names;
  bool keep_all = true;
  for (const auto& d : config_.at("datasets")) {
    const bool keep = d.value("keep_splits", false);
    keep_all = keep_all && keep;
    auto c = evadebench::ingest(base_dir_ / d.at("path").get<std::string>(), d.value("name", std::string()), keep);
    for (auto sample : c.samples()) {
      if (sample.dataset.empty()) sample.dataset = c.name();
      all.push_back(std::move(sample));
    }
  }
  Corpus merged("ingested", std::move(all));
  if (!keep_all) merged = assign_splits(merged, config_.value("split_ratio", 0.8), seed());
  std::vector<json> records;
  std::map<std::string, std::size_t> counts;
  for (const auto& sample : merged.samples()) {
    records.push_back(to_json(sample));
    ++counts[sample.dataset + "/" + to_string(sample.split)];
  }
  s.append_all(Stream::samples, records);
  state_->corpus = std::move(merged);
  return {{"samples", records.size()}, {"counts", counts}};
}

json Harness::attack(store::ResultsStore& s) {
  load_corpus(s);
  const auto targets = attack_targets(corpus(), overrides_.dataset);
  const bool qpa = overrides_.qpa || (config_.contains("qpa") && config_.at("qpa") != json(false));
  const bool trace = overrides_.trace || config_.value("trace", false);
  const std::size_t threads = config_.value("threads", std::size_t{1});

  std::vector<std::unique_ptr<attacks::Attack>> owned;
  std::vector<const attacks::Attack*> runs;
  for (const auto& name : selected_attacks()) {
    owned.push_back(make_attack(name, false));
    runs.push_back(owned.back().get());
    if (qpa && qpa_capable(name)) {
      owned.push_back(make_attack(name, true));
      runs.push_back(owned.back().get());
    }
  }
  std::vector<std::string> blend = overrides_.blend;
  json blend_cfg = config_.value("blend", json(nullptr));
  if (blend.empty() && blend_cfg.is_object()) blend = blend_cfg.value("attacks", std::vector<std::string>{});
  if (!blend.empty()) {
    blending::BlendOptions bo;
    const auto policy = overrides_.blend_policy.value_or(blend_cfg.is_object() ? blend_cfg.value("policy", "alternate") : "alternate");
    bo.policy = blending::parse_policy(policy);
    if (bo.policy == blending::Policy::custom) throw InputError("custom blend policies are only available from the library");
    if (blend_cfg.is_object()) bo.context_window = blend_cfg.value("context_window", std::size_t{0});
    std::vector<const attacks::Attack*> parts;
    for (const auto& name : blend) {
      owned.push_back(make_attack(name, false));
      parts.push_back(owned.back().get());
    }
    owned.push_back(std::make_unique<blending::BlendAttack>(parts, bo));
    runs.push_back(owned.back().get());
  }
  if (runs.empty()) throw InputError("no attacks selected");
  json summary = json::object();
  for (const auto* a : runs) {
    const auto outcomes = attacks::run_attacks(*a, targets, threads);
    std::vector<json> records;
    for (const auto& o : outcomes) records.push_back(to_json(o, trace));
    s.append_all(Stream::outcomes, records);
    summary[a->id()] = outcomes.size();
  }
  return {{"attacks", summary}, {"samples", targets.size()}};
}

json Harness::score(store::ResultsStore& s) {
  load_corpus(s);
  std::vector<AttackOutcome> outcomes;
  if (s.has(Stream::outcomes)) {
    for (const auto& r : s.read(Stream::outcomes)) outcomes.push_back(outcome_from_json(r));
  }
  std::vector<const TextSample*> clean;
  for (const auto& sample : corpus().samples()) {
    if (!overrides_.dataset || sample.dataset == *overrides_.dataset) clean.push_back(&sample);
  }
  json summary = json::object();
  for (const auto& name : selected_detectors()) {
    const auto& d = detector(name);
    std::vector<json> records;
    std::size_t failures = 0;
    const auto emit = [&](const TextSample& sample, const std::string& attack_id, const std::string& text) {
      json r = {{"detector_id", name},
                {"sample_id", sample.id},
                {"attack_id", attack_id},
                {"split", to_string(sample.split)},
                {"label", to_string(sample.label)},
                {"dataset", sample.dataset},
                {"generator", sample.generator ? json(*sample.generator) : json(nullptr)},
                {"direction", detectors::to_string(d.direction())}};
      try {
        r["value"] = json::array({d.score(text)});
      } catch (const Error& e) {
        r["value"] = nullptr;
        r["error"] = e.what();
        ++failures;
      }
      records.push_back(std::move(r));
    };
    for (const auto* sample : clean) emit(*sample, "clean", sample->text);
    for (const auto& o : outcomes) {
      const auto* sample = corpus().find(o.sample_id);
      if (sample == nullptr) throw InputError("outcome for unknown sample '" + o.sample_id + "'");
      if (overrides_.dataset && sample->dataset != *overrides_.dataset) continue;
      emit(*sample, o.attack_id, o.attacked_text);
    }
    s.append_all(Stream::scores, records);
    summary[name] = {{"records", records.size()}, {"failures", failures}};
  }
  return summary;
}

json Harness::eval(store::ResultsStore& s) {
  const auto scores = s.read(Stream::scores);
  struct Entry {
    const json* record;
  };
  std::map<std::string, std::vector<const json*>> by_detector;
  for (const auto& r : scores) by_detector[r.at("detector_id").get<std::string>()].push_back(&r);
  std::vector<json> rows;
  for (const auto& [det, recs] : by_detector) {
    const auto direction = detectors::parse_direction(recs.front()->at("direction").get<std::string>());
    std::set<std::string> datasets, attack_ids;
    for (const auto* r : recs) {
      datasets.insert(r->at("dataset").get<std::string>());
      if (r->at("attack_id") != "clean") attack_ids.insert(r->at("attack_id").get<std::string>());
    }
    for (const auto& ds : datasets) {
      const auto in = [&](const json* r, const char* split, const char* label) {
        return r->at("dataset") == ds && r->at("split") == split && r->at("label") == label;
      };
      std::vector<double> train_pos, train_neg;
      bool train_failed = false;
      for (const auto* r : recs) {
        if (r->at("attack_id") != "clean") continue;
        const bool pos = in(r, "train", "machine"), neg = in(r, "train", "human");
        if (!pos && !neg) continue;
        if (r->at("value").is_null()) {
          train_failed = true;
          continue;
        }
        (pos ? train_pos : train_neg).push_back(r->at("value")[0].get<double>());
      }
      std::set<std::string> generators = {"all"};
      for (const auto* r : recs) {
        if (in(r, "test", "machine") && !r->at("generator").is_null()) generators.insert(r->at("generator").get<std::string>());
      }
      std::vector<std::string> cells = {"clean"};
      cells.insert(cells.end(), attack_ids.begin(), attack_ids.end());
      for (const auto& gen : generators) {
        for (const auto& attack_id : cells) {
          evaluation::CellKey key{ds, gen, det, attack_id, "", ""};
          std::vector<double> pos, neg;
          std::string error;
          for (const auto* r : recs) {
            const bool is_neg = r->at("attack_id") == "clean" && in(r, "test", "human");
            const bool is_pos = r->at("attack_id") == attack_id && in(r, "test", "machine") &&
                                (gen == "all" || r->at("generator") == gen);
            if (!is_neg && !is_pos) continue;
            if (r->at("value").is_null()) {
              error = r->value("error", "scoring failed");
              continue;
            }
            (is_pos ? pos : neg).push_back(r->at("value")[0].get<double>());
          }
          evaluation::EvalReport rep;
          if (!error.empty() || train_failed || pos.empty() || neg.empty() || train_pos.empty() || train_neg.empty()) {
            rep.key = key;
            rep.failed = true;
            rep.error = !error.empty() ? error
                        : train_failed  ? "scoring failed on the train split"
                                        : "cell has no positive or no negative scores";
            rep.n_pos = pos.size();
            rep.n_neg = neg.size();
            rep.auc = std::nan("");
            rep.metrics.threshold = rep.metrics.accuracy = rep.metrics.precision = rep.metrics.recall =
                rep.metrics.f1 = rep.auc;
          } else {
            const double t = evaluation::optimal_f1_threshold(train_pos, train_neg, direction);
            rep = evaluation::evaluate_scores(key, pos, neg, direction, t);
          }
          rows.push_back(evaluation::to_json(rep));
        }
      }
    }
  }
  s.append_all(Stream::eval, rows);
  return {{"cells", rows.size()}, {"scores_run", *s.latest_run(Stream::scores)}};
}

json Harness::quality(store::ResultsStore& s) {
  load_corpus(s);
  const auto outcomes = s.read(Stream::outcomes);
  std::vector<json> rows;
  std::size_t failures = 0;
  for (const auto& r : outcomes) {
    const auto o = outcome_from_json(r);
    const auto* sample = corpus().find(o.sample_id);
    if (sample == nullptr) throw InputError("outcome for unknown sample '" + o.sample_id + "'");
    if (overrides_.dataset && sample->dataset != *overrides_.dataset) continue;
    try {
      rows.push_back(quality::to_json(quality::quality_report(*sample, o, quality_model(), embedder())));
    } catch (const Error& e) {
      rows.push_back({{"sample_id", o.sample_id}, {"attack_id", o.attack_id}, {"error", e.what()}});
      ++failures;
    }
  }
  s.append_all(Stream::quality, rows);
  return {{"reports", rows.size()}, {"failures", failures}};
}

json Harness::overhead(store::ResultsStore& s) {
  load_corpus(s);
  auto plan = overhead::default_plan();
  const auto oc = config_.value("overhead", json::object());
  if (oc.contains("targets")) plan.targets = oc.at("targets").get<std::vector<std::size_t>>();
  plan.per_bucket_cap = oc.value("per_bucket_cap", plan.per_bucket_cap);
  plan.width = oc.value("width", plan.width);
  const auto pool = filter(corpus(), [&](const TextSample& x) {
    return x.split == Split::test && x.label == Label::machine && (!overrides_.dataset || x.dataset == *overrides_.dataset);
  });
  const auto buckets = overhead::sample_length_buckets(pool, plan, seed());
  const bool qpa = overrides_.qpa || (config_.contains("qpa") && config_.at("qpa") != json(false));
  std::vector<std::unique_ptr<attacks::Attack>> owned;
  for (const auto& name : selected_attacks()) {
    owned.push_back(make_attack(name, false));
    if (qpa && qpa_capable(name)) owned.push_back(make_attack(name, true));
  }
  std::vector<json> rows;
  for (const auto& a : owned) {
    for (const auto& b : buckets) {
      auto rec = attacks::run_attack(*a, b.sample, attacks::Measurement::exclusive).resource;
      rec.token_length = b.target;
      rows.push_back(to_json(rec));
    }
  }
  s.append_all(Stream::overhead, rows);
  json counts = json::object();
  for (const auto& [t, n] : overhead::bucket_counts(plan, buckets)) counts[std::to_string(t)] = n;
  return {{"records", rows.size()}, {"bucket_counts", counts}};
}

json Harness::scenario(store::ResultsStore& s) {
  load_corpus(s);
  const auto sc = config_.value("scenario", json::object());
  std::vector<std::string> dets = !overrides_.detectors.empty()
                                      ? overrides_.detectors
                                      : sc.value("detectors", selected_detectors());
  std::vector<std::string> train = sc.value("train_attacks", selected_attacks());
  std::vector<std::string> test = sc.value("test_attacks", train);
  if (!overrides_.attacks.empty()) train = test = overrides_.attacks;
  evaluation::ScenarioEnvironment env;
  env.corpus = &corpus();
  env.backends = metric_backends();
  env.embedder = &embedder();
  env.attacks = [this](const std::string& name) { return make_attack(name, false); };
  env.registered = attacks::attack_names();
  env.threads = config_.value("threads", std::size_t{1});
  std::map<std::string, std::map<std::string, std::string>> memo;
  env.memo = &memo;
  std::vector<json> rows;
  for (const auto& d : dets) {
    for (const auto& a : train) {
      evaluation::ScenarioSpec spec{d, a, test, overrides_.dataset.value_or(""), seed()};
      for (const auto& cell : evaluation::run_scenario(spec, env).cells) rows.push_back(evaluation::to_json(cell));
    }
  }
  s.append_all(Stream::scenario, rows);
  return {{"cells", rows.size()}};
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

std::string eval_csv(const std::vector<evaluation::EvalReport>& rows) {
  std::string out = evaluation::csv_header() + "\n";
  for (const auto& r : rows) out += evaluation::to_csv_row(r) + "\n";
  return out;
}

}  // namespace

json Harness::report(const store::ResultsStore& s) {
  const fs::path dir = s.dir() / "report";
  json out = {{"config_hash", s.hash()}, {"warnings", json::array()}};
  std::vector<evaluation::EvalReport> cells;
  for (const auto& r : s.read(Stream::eval)) cells.push_back(evaluation::eval_from_json(r));
  write_file(dir / "eval.csv", eval_csv(cells));
  std::vector<evaluation::EvalReport> overall;
  for (const auto& c : cells) {
    if (c.key.generator == "all") overall.push_back(c);
  }
  const std::vector<std::string> by_attack = {"attack"};
  const auto per_attack = evaluation::aggregate(overall, by_attack);
  write_file(dir / "eval_by_attack.csv", eval_csv(per_attack));
  json auc = json::object();
  for (const auto& r : per_attack) auc[r.key.attack_id] = std::isfinite(r.auc) ? json(r.auc) : json(nullptr);
  out["mean_auc"] = auc;

  std::vector<quality::QualityAggregate> qagg;
  if (s.has(Stream::quality)) {
    std::map<std::string, std::vector<quality::QualityReport>> by;
    for (const auto& r : s.read(Stream::quality)) {
      if (r.contains("error")) continue;
      auto q = quality::quality_from_json(r);
      by[q.attack_id].push_back(q);
    }
    std::string csv = "attack_id,n,ppl_before,ppl_after,ppl_delta,abs_ppl_delta,cs,rouge_l,fre_before,fre_after,fre_delta,abs_fre_delta\n";
    for (const auto& [a, reps] : by) {
      const auto g = quality::aggregate(reps);
      qagg.push_back(g);
      char buf[512];
      std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", a.c_str(), g.n,
                    g.ppl_before, g.ppl_after, g.ppl_delta, g.abs_ppl_delta, g.cs, g.rouge_l, g.fre_before, g.fre_after,
                    g.fre_delta, g.abs_fre_delta);
      csv += buf;
    }
    write_file(dir / "quality.csv", csv);
  } else {
    out["warnings"].push_back("no quality stream");
  }

  std::vector<OverheadRecord> orecs;
  if (s.has(Stream::overhead)) {
    for (const auto& r : s.read(Stream::overhead)) orecs.push_back(overhead_from_json(r));
    const auto rows = overhead::overhead_report(orecs);
    write_file(dir / "overhead_time.csv", overhead::overhead_csv(rows, "wall_time"));
    write_file(dir / "overhead_calls.csv", overhead::overhead_csv(rows, "backend_calls"));
    write_file(dir / "overhead_memory.csv", overhead::overhead_csv(rows, "peak_memory"));
  } else {
    out["warnings"].push_back("no overhead stream");
  }

  if (s.has(Stream::scenario)) {
    std::vector<evaluation::EvalReport> sc;
    for (const auto& r : s.read(Stream::scenario)) sc.push_back(evaluation::eval_from_json(r));
    write_file(dir / "scenario.csv", eval_csv(sc));
  }

  const auto weights = report::weights_from_json(config_.value("summary_weights", json::object()));
  try {
    const auto summary = report::normalize_summary(cells, qagg, orecs, weights);
    out["summary"] = report::to_json(summary);
    for (const auto& w : summary.warnings) out["warnings"].push_back(w);
  } catch (const InputError& e) {
    out["summary"] = nullptr;
    out["warnings"].push_back(std::string("summary not available: ") + e.what());
  }
  write_file(dir / "summary.json", out.dump(2) + "\n");
  return out;
}

json run_command(const std::string& command, const json& config, const fs::path& base_dir, const fs::path& out_dir,
                 const Overrides& overrides) {
  if (!contains(commands(), command)) throw InputError("unknown command '" + command + "'");
  Harness h(config, base_dir, overrides);
  if (command == "report") {
    const auto s = store::ResultsStore::inspect(out_dir, config);
    return h.report(s);
  }
  auto s = store::ResultsStore::open(out_dir, config, command);
  json result;
  if (command == "ingest") result = h.ingest(s);
  else if (command == "attack") result = h.attack(s);
  else if (command == "score") result = h.score(s);
  else if (command == "quality") result = h.quality(s);
  else if (command == "eval") result = h.eval(s);
  else if (command == "overhead") result = h.overhead(s);
  else result = h.scenario(s);
  result["run_id"] = s.run_id();
  s.close_run({{"overrides", to_json(overrides)}, {"result", result}});
  return result;
}

}  // namespace evadebench::pipeline
