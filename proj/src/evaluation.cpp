#include "evadebench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"

namespace evadebench::evaluation {

using nlohmann::json;

namespace {

std::vector<double> oriented(std::span<const double> v, Direction d) {
  if (d == Direction::feature_vector) throw InputError("feature vectors have no ranking direction");
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (!std::isfinite(x)) throw InputError("non-finite score");
    out.push_back(d == Direction::lower_is_mgt ? -x : x);
  }
  return out;
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

}  // namespace

double compute_auc(std::span<const double> pos, std::span<const double> neg, Direction direction) {
  if (pos.empty() || neg.empty()) throw InputError("AUC needs at least one positive and one negative score");
  const auto p = oriented(pos, direction);
  const auto n = oriented(neg, direction);
  std::vector<std::pair<double, bool>> all;
  all.reserve(p.size() + n.size());
  for (double x : p) all.emplace_back(x, true);
  for (double x : n) all.emplace_back(x, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Ranks are 1-based; tied values share the mean of their ranks. Doubling
  // keeps every intermediate an exact integer.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const std::uint64_t twice_mean_rank = (i + 1) + j;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) twice_rank_sum += twice_mean_rank;
    }
    i = j;
  }
  const std::uint64_t np = p.size();
  const std::uint64_t twice_u = twice_rank_sum - np * (np + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(np) * static_cast<double>(n.size()));
}

ThresholdMetrics metrics_at(std::span<const double> pos, std::span<const double> neg, double threshold,
                            Direction direction) {
  const auto p = oriented(pos, direction);
  const auto n = oriented(neg, direction);
  double tp = 0, fp = 0;
  for (double x : p) tp += x >= threshold ? 1 : 0;
  for (double x : n) fp += x >= threshold ? 1 : 0;
  const double fn = static_cast<double>(p.size()) - tp;
  const double tn = static_cast<double>(n.size()) - fp;
  ThresholdMetrics m;
  m.threshold = threshold;
  m.accuracy = safe_div(tp + tn, tp + tn + fp + fn);
  m.precision = safe_div(tp, tp + fp);
  m.recall = safe_div(tp, tp + fn);
  m.f1 = safe_div(2 * tp, 2 * tp + fp + fn);
  return m;
}

double optimal_f1_threshold(std::span<const double> pos, std::span<const double> neg, Direction direction) {
  if (pos.empty() || neg.empty()) throw InputError("threshold fitting needs both classes");
  const auto p = oriented(pos, direction);
  const auto n = oriented(neg, direction);
  std::vector<double> cands(p.begin(), p.end());
  cands.insert(cands.end(), n.begin(), n.end());
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  // Sweep thresholds upwards, counting how many scores of each class reach them.
  std::vector<double> ps(p), ns(n);
  std::sort(ps.begin(), ps.end());
  std::sort(ns.begin(), ns.end());
  double best_f1 = -1.0, best_t = cands.front();
  for (double t : cands) {
    const double tp = static_cast<double>(ps.end() - std::lower_bound(ps.begin(), ps.end(), t));
    const double fp = static_cast<double>(ns.end() - std::lower_bound(ns.begin(), ns.end(), t));
    const double fn = static_cast<double>(ps.size()) - tp;
    const double f1 = safe_div(2 * tp, 2 * tp + fp + fn);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

json to_json(const EvalReport& r) {
  const auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j = {{"dataset", r.key.dataset},
            {"generator", r.key.generator},
            {"detector_id", r.key.detector_id},
            {"attack_id", r.key.attack_id},
            {"auc", num(r.auc)},
            {"threshold", num(r.metrics.threshold)},
            {"accuracy", num(r.metrics.accuracy)},
            {"precision", num(r.metrics.precision)},
            {"recall", num(r.metrics.recall)},
            {"f1", num(r.metrics.f1)},
            {"n_pos", r.n_pos},
            {"n_neg", r.n_neg},
            {"n_cells", r.n_cells},
            {"failed", r.failed}};
  if (!r.key.train_attack_id.empty()) j["train_attack_id"] = r.key.train_attack_id;
  if (!r.key.class_name.empty()) j["class"] = r.key.class_name;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

EvalReport eval_from_json(const json& j) {
  const auto num = [&](const char* k) {
    return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(k).get<double>();
  };
  EvalReport r;
  r.key.dataset = j.at("dataset").get<std::string>();
  r.key.generator = j.at("generator").get<std::string>();
  r.key.detector_id = j.at("detector_id").get<std::string>();
  r.key.attack_id = j.at("attack_id").get<std::string>();
  r.key.train_attack_id = j.value("train_attack_id", "");
  r.key.class_name = j.value("class", "");
  r.auc = num("auc");
  r.metrics.threshold = num("threshold");
  r.metrics.accuracy = num("accuracy");
  r.metrics.precision = num("precision");
  r.metrics.recall = num("recall");
  r.metrics.f1 = num("f1");
  r.n_pos = j.at("n_pos").get<std::size_t>();
  r.n_neg = j.at("n_neg").get<std::size_t>();
  r.n_cells = j.value("n_cells", std::size_t{1});
  r.failed = j.value("failed", false);
  r.error = j.value("error", "");
  return r;
}

std::string csv_header() {
  return "dataset,generator,detector_id,attack_id,train_attack_id,class,auc,threshold,accuracy,precision,recall,f1,"
         "n_pos,n_neg,n_cells,failed";
}

std::string to_csv_row(const EvalReport& r) {
  std::ostringstream o;
  o.precision(17);
  const auto num = [&](double x) {
    if (std::isfinite(x)) o << x;
  };
  o << r.key.dataset << ',' << r.key.generator << ',' << r.key.detector_id << ',' << r.key.attack_id << ','
    << r.key.train_attack_id << ',' << r.key.class_name << ',';
  num(r.auc);
  o << ',';
  num(r.metrics.threshold);
  o << ',';
  num(r.metrics.accuracy);
  o << ',';
  num(r.metrics.precision);
  o << ',';
  num(r.metrics.recall);
  o << ',';
  num(r.metrics.f1);
  o << ',' << r.n_pos << ',' << r.n_neg << ',' << r.n_cells << ',' << (r.failed ? "true" : "false");
  return o.str();
}

EvalReport evaluate_scores(CellKey key, std::span<const double> pos, std::span<const double> neg, Direction direction,
                           double threshold) {
  EvalReport r;
  r.key = std::move(key);
  r.n_pos = pos.size();
  r.n_neg = neg.size();
  r.auc = compute_auc(pos, neg, direction);
  r.metrics = metrics_at(pos, neg, threshold, direction);
  return r;
}

double fit_threshold(const detectors::TextDetector& detector, std::span<const std::string> human_train,
                     std::span<const std::string> machine_train) {
  std::vector<double> p, n;
  for (const auto& t : machine_train) p.push_back(detector.score(t));
  for (const auto& t : human_train) n.push_back(detector.score(t));
  return optimal_f1_threshold(p, n, detector.direction());
}

EvalReport evaluate_binary(const detectors::TextDetector& detector, std::span<const std::string> human_test,
                           std::span<const std::string> positives, CellKey key, double threshold) {
  key.detector_id = key.detector_id.empty() ? detector.id() : key.detector_id;
  std::vector<double> p, n;
  try {
    for (const auto& t : positives) p.push_back(detector.score(t));
    for (const auto& t : human_test) n.push_back(detector.score(t));
    return evaluate_scores(key, p, n, detector.direction(), threshold);
  } catch (const Error& e) {
    EvalReport r;
    r.key = std::move(key);
    r.n_pos = positives.size();
    r.n_neg = human_test.size();
    r.failed = true;
    r.error = e.what();
    r.auc = std::numeric_limits<double>::quiet_NaN();
    r.metrics.threshold = r.metrics.accuracy = r.metrics.precision = r.metrics.recall = r.metrics.f1 = r.auc;
    return r;
  }
}

std::vector<EvalReport> evaluate_attribution(const detectors::HeadDetector& detector, const Corpus& test,
                                             const std::string& dataset) {
  const auto& classes = detector.classes();
  std::vector<std::string> truth;
  std::vector<std::vector<double>> scores;
  for (const auto& s : test.samples()) {
    const auto c = detectors::class_of(s, classes);
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) {
      throw InputError("test sample '" + s.id + "' belongs to class '" + c + "' unknown to the detector");
    }
    truth.push_back(c);
    scores.push_back(detector.class_scores(s.text));
  }
  std::set<std::string> present(truth.begin(), truth.end());
  if (present.size() < 2) throw InputError("attribution needs at least two classes in the test set");
  std::vector<EvalReport> out;
  double macro = 0.0;
  std::size_t n_total_pos = 0, n_total_neg = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (!present.count(classes[k])) throw InputError("class '" + classes[k] + "' is absent from the test set");
    std::vector<double> p, n;
    for (std::size_t i = 0; i < truth.size(); ++i) (truth[i] == classes[k] ? p : n).push_back(scores[i][k]);
    const double t = optimal_f1_threshold(p, n);
    CellKey key{dataset, "all", detector.id(), "clean", "", classes[k]};
    out.push_back(evaluate_scores(key, p, n, Direction::higher_is_mgt, t));
    macro += out.back().auc;
    n_total_pos += p.size();
    n_total_neg += n.size();
  }
  EvalReport m;
  m.key = {dataset, "all", detector.id(), "clean", "", "macro"};
  m.auc = macro / static_cast<double>(classes.size());
  m.metrics.threshold = m.metrics.accuracy = m.metrics.precision = m.metrics.recall = m.metrics.f1 =
      std::numeric_limits<double>::quiet_NaN();
  m.n_pos = n_total_pos;
  m.n_neg = n_total_neg;
  m.n_cells = classes.size();
  out.push_back(m);
  return out;
}

std::vector<EvalReport> aggregate(std::span<const EvalReport> cells, std::span<const std::string> group_by) {
  static const std::set<std::string> known = {"dataset", "generator", "detector", "attack", "train_attack", "class"};
  for (const auto& g : group_by) {
    if (!known.count(g)) throw InputError("unknown aggregation key '" + g + "'");
  }
  const auto has = [&](const char* k) { return std::find(group_by.begin(), group_by.end(), k) != group_by.end(); };
  const auto project = [&](const CellKey& k) {
    CellKey p;
    p.dataset = has("dataset") ? k.dataset : "*";
    p.generator = has("generator") ? k.generator : "*";
    p.detector_id = has("detector") ? k.detector_id : "*";
    p.attack_id = has("attack") ? k.attack_id : "*";
    p.train_attack_id = has("train_attack") ? k.train_attack_id : "";
    p.class_name = has("class") ? k.class_name : "";
    return p;
  };
  const auto tuple_of = [](const CellKey& k) {
    return std::make_tuple(k.dataset, k.generator, k.detector_id, k.attack_id, k.train_attack_id, k.class_name);
  };
  std::map<decltype(tuple_of(CellKey{})), std::vector<const EvalReport*>> groups;
  std::map<decltype(tuple_of(CellKey{})), CellKey> keys;
  for (const auto& c : cells) {
    const auto k = project(c.key);
    groups[tuple_of(k)].push_back(&c);
    keys[tuple_of(k)] = k;
  }
  if (groups.empty()) throw InputError("nothing to aggregate");
  std::vector<EvalReport> out;
  for (const auto& [t, members] : groups) {
    EvalReport r;
    r.key = keys[t];
    r.n_cells = members.size();
    const double n = static_cast<double>(members.size());
    std::vector<std::string> errors;
    for (const auto* m : members) {
      if (m->failed) {
        r.failed = true;
        errors.push_back(m->key.detector_id + "/" + m->key.attack_id + ": " + m->error);
      }
      r.auc += m->auc / n;
      r.metrics.threshold = std::numeric_limits<double>::quiet_NaN();
      r.metrics.accuracy += m->metrics.accuracy / n;
      r.metrics.precision += m->metrics.precision / n;
      r.metrics.recall += m->metrics.recall / n;
      r.metrics.f1 += m->metrics.f1 / n;
      r.n_pos += m->n_pos;
      r.n_neg += m->n_neg;
    }
    if (members.size() == 1) {
      r.auc = members[0]->auc;
      r.metrics = members[0]->metrics;
    }
    if (r.failed) {
      r.auc = std::numeric_limits<double>::quiet_NaN();
      for (const auto& e : errors) r.error += (r.error.empty() ? "" : "; ") + e;
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct RetrainedDetector {
  std::unique_ptr<detectors::TextDetector> detector;
  double threshold = 0.0;
};

RetrainedDetector retrain(const ScenarioSpec& spec, const ScenarioEnvironment& env,
                          const std::vector<const TextSample*>& human, const std::vector<const TextSample*>& machine,
                          const std::vector<std::string>& extra_machine) {
  std::vector<std::string> h, m;
  for (const auto* s : human) h.push_back(s->text);
  for (const auto* s : machine) m.push_back(s->text);
  m.insert(m.end(), extra_machine.begin(), extra_machine.end());
  LogisticOptions opts = env.logistic;
  opts.seed = spec.seed;
  RetrainedDetector r;
  if (spec.detector_id == "lm_d") {
    if (env.embedder == nullptr) throw InputError("lm_d retraining needs an embedder");
    std::vector<TextSample> samples;
    for (const auto* s : human) samples.push_back(*s);
    for (const auto* s : machine) samples.push_back(*s);
    for (std::size_t i = 0; i < extra_machine.size(); ++i) {
      TextSample s;
      s.id = "augmented-" + std::to_string(i);
      s.text = extra_machine[i];
      s.label = Label::machine;
      s.dataset = spec.dataset.empty() ? "augmented" : spec.dataset;
      s.generator = "augmented";
      s.split = Split::train;
      samples.push_back(std::move(s));
    }
    Corpus train("scenario-train", std::move(samples));
    r.detector = std::make_unique<detectors::HeadDetector>(
        detectors::train_head_detector(train, *env.embedder, {"human", "machine"}, spec.seed, opts));
  } else {
    const auto names = detectors::metric_detector_names();
    if (std::find(names.begin(), names.end(), spec.detector_id) == names.end()) {
      throw InputError("detector '" + spec.detector_id + "' cannot be retrained");
    }
    r.detector = std::make_unique<detectors::MetricClassifierDetector>(
        detectors::train_metric_classifier(spec.detector_id, env.backends, h, m, opts));
  }
  r.threshold = fit_threshold(*r.detector, h, m);
  return r;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const ScenarioEnvironment& env) {
  if (env.corpus == nullptr) throw InputError("scenario needs a corpus");
  if (!env.attacks) throw InputError("scenario needs an attack factory");
  const auto registered = [&](const std::string& name) {
    return std::find(env.registered.begin(), env.registered.end(), name) != env.registered.end();
  };
  if (!registered(spec.train_attack_id)) throw InputError("unregistered attack '" + spec.train_attack_id + "'");
  if (spec.test_attack_ids.empty()) throw InputError("scenario has no test attacks");
  for (const auto& a : spec.test_attack_ids) {
    if (!registered(a)) throw InputError("unregistered attack '" + a + "'");
  }

  std::vector<const TextSample*> human_train, machine_train, human_test, machine_test;
  for (const auto& s : env.corpus->samples()) {
    if (!spec.dataset.empty() && s.dataset != spec.dataset) continue;
    const bool machine = s.label == Label::machine;
    if (s.split == Split::train) (machine ? machine_train : human_train).push_back(&s);
    if (s.split == Split::test) (machine ? machine_test : human_test).push_back(&s);
  }
  if (human_train.empty() || machine_train.empty() || human_test.empty() || machine_test.empty()) {
    throw InputError("scenario needs human and machine samples in both splits");
  }

  const auto attack_texts = [&](const std::string& name, const std::vector<const TextSample*>& samples) {
    std::vector<TextSample> todo;
    for (const auto* s : samples) {
      if (env.memo == nullptr || !(*env.memo)[name].count(s->id)) todo.push_back(*s);
    }
    std::map<std::string, std::string> fresh;
    if (!todo.empty()) {
      auto attack = env.attacks(name);
      for (auto& o : attacks::run_attacks(*attack, todo, env.threads)) fresh[o.sample_id] = std::move(o.attacked_text);
    }
    std::vector<std::string> texts;
    for (const auto* s : samples) {
      if (auto it = fresh.find(s->id); it != fresh.end()) {
        texts.push_back(it->second);
        if (env.memo != nullptr) (*env.memo)[name][s->id] = it->second;
      } else {
        texts.push_back((*env.memo)[name].at(s->id));
      }
    }
    return texts;
  };

  std::set<std::string> seen;
  for (const auto* s : human_train) seen.insert(s->text);
  for (const auto* s : machine_train) seen.insert(s->text);
  std::vector<std::string> extra;
  for (auto& t : attack_texts(spec.train_attack_id, machine_train)) {
    if (seen.insert(t).second) extra.push_back(std::move(t));
  }
  const auto retrained = retrain(spec, env, human_train, machine_train, extra);

  std::vector<std::string> human_texts;
  for (const auto* s : human_test) human_texts.push_back(s->text);
  ScenarioResult result;
  result.n_augmented = extra.size();
  for (const auto& b : spec.test_attack_ids) {
    const auto positives = attack_texts(b, machine_test);
    CellKey key{spec.dataset, "all", spec.detector_id, b, spec.train_attack_id, ""};
    result.cells.push_back(evaluate_binary(*retrained.detector, human_texts, positives, key, retrained.threshold));
  }
  return result;
}

}  // namespace evadebench::evaluation
