#include "evadebench/model_detectors.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "evadebench/errors.hpp"
#include "evadebench/random.hpp"

namespace evadebench::detectors {

namespace {

bool binary_classes(const std::vector<std::string>& classes) {
  return classes.size() == 2 && std::find(classes.begin(), classes.end(), "human") != classes.end() &&
         std::find(classes.begin(), classes.end(), "machine") != classes.end();
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct FittedHeads {
  std::vector<LogisticClassifier> heads;
};

// Binary heads predict "machine"; OvR heads predict their own class.
FittedHeads fit(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& y,
                const std::vector<std::string>& classes, bool binary, const LogisticOptions& options) {
  FittedHeads out;
  const std::size_t n_heads = binary ? 1 : classes.size();
  const std::size_t machine = binary ? static_cast<std::size_t>(
                                           std::find(classes.begin(), classes.end(), "machine") - classes.begin())
                                     : 0;
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t positive = binary ? machine : h;
    std::vector<LabeledFeatures> data;
    data.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) data.push_back({x[i], y[i] == positive ? 1 : 0});
    out.heads.push_back(train_classifier(data, {}, options));
  }
  return out;
}

std::vector<double> scores_for(const std::vector<LogisticClassifier>& heads, const std::vector<std::string>& classes,
                               const std::vector<double>& features) {
  if (heads.size() == 1) {
    const double pm = heads[0].predict(features);
    std::vector<double> out(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) out[c] = classes[c] == "machine" ? pm : 1.0 - pm;
    return out;
  }
  std::vector<double> out;
  for (const auto& h : heads) out.push_back(h.predict(features));
  return out;
}

}  // namespace

HeadDetector::HeadDetector(const lm::Embedder& embedder, std::vector<std::string> classes,
                           std::vector<LogisticClassifier> heads, std::string trained_on, HeadTrainingReport report)
    : embedder_(&embedder),
      classes_(std::move(classes)),
      heads_(std::move(heads)),
      trained_on_(std::move(trained_on)),
      report_(std::move(report)) {
  if (classes_.empty()) throw InputError("head detector needs at least one class");
  for (const auto& h : heads_) {
    if (h.weights.size() != embedder_->dimension()) throw InputError("head dimension does not match the embedder");
  }
}

std::vector<double> HeadDetector::class_scores(std::string_view text) const {
  return scores_for(heads_, classes_, embedder_->embed(text));
}

std::string HeadDetector::predict(std::string_view text) const { return classes_[argmax(class_scores(text))]; }

double HeadDetector::score(std::string_view text) const {
  const auto s = class_scores(text);
  if (is_binary()) return s[static_cast<std::size_t>(std::find(classes_.begin(), classes_.end(), "machine") - classes_.begin())];
  double best = 0.0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (classes_[c] == "human") return 1.0 - s[c];
    best = std::max(best, s[c]);
  }
  return best;
}

std::string class_of(const TextSample& s, const std::vector<std::string>& classes) {
  if (binary_classes(classes)) return to_string(s.label);
  return s.label == Label::human ? std::string("human") : *s.generator;
}

HeadDetector train_head_detector(const Corpus& train, const lm::Embedder& embedder, std::vector<std::string> classes,
                                 std::uint64_t seed, const LogisticOptions& base_options) {
  if (classes.empty()) throw InputError("no classes given");
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InputError("a head detector needs at least two classes");
  const bool binary = binary_classes(classes);

  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  std::vector<std::size_t> per_class(classes.size(), 0);
  for (const auto& s : train) {
    const std::string c = class_of(s, classes);
    auto it = std::find(classes.begin(), classes.end(), c);
    if (it == classes.end()) continue;
    const auto idx = static_cast<std::size_t>(it - classes.begin());
    x.push_back(embedder.embed(s.text));
    y.push_back(idx);
    ++per_class[idx];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (per_class[c] == 0) throw InputError("training corpus has no sample of class '" + classes[c] + "'");
  }
  LogisticOptions options = base_options;
  options.seed = seed;

  // Held-out fold: per class, a seeded 20% goes to the holdout.
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, fnv1a("holdout")));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> seen(classes.size(), 0);
  std::vector<std::vector<double>> fit_x, hold_x;
  std::vector<std::size_t> fit_y, hold_y;
  for (std::size_t i : order) {
    const std::size_t c = y[i];
    const std::size_t n_hold = per_class[c] / 5;
    if (seen[c]++ < n_hold) {
      hold_x.push_back(x[i]);
      hold_y.push_back(c);
    } else {
      fit_x.push_back(x[i]);
      fit_y.push_back(c);
    }
  }
  HeadTrainingReport report;
  report.n_fit = fit_x.size();
  report.n_holdout = hold_x.size();
  bool fold_has_all = true;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (std::find(fit_y.begin(), fit_y.end(), c) == fit_y.end()) fold_has_all = false;
  }
  if (!hold_x.empty() && fold_has_all) {
    const auto fold = fit(fit_x, fit_y, classes, binary, options);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < hold_x.size(); ++i) {
      if (argmax(scores_for(fold.heads, classes, hold_x[i])) == hold_y[i]) ++correct;
    }
    report.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(hold_x.size());
  }

  auto final_heads = fit(x, y, classes, binary, options);
  std::vector<std::size_t> correct_per(classes.size(), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (argmax(scores_for(final_heads.heads, classes, x[i])) == y[i]) {
      ++correct;
      ++correct_per[y[i]];
    }
  }
  report.train_accuracy = static_cast<double>(correct) / static_cast<double>(x.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    report.per_class_train_accuracy[classes[c]] =
        static_cast<double>(correct_per[c]) / static_cast<double>(per_class[c]);
  }
  return HeadDetector(embedder, std::move(classes), std::move(final_heads.heads), train.name(), std::move(report));
}

HeadDetector surrogate_for_hmgc(const Corpus& train, const lm::Embedder& embedder, std::uint64_t seed) {
  return train_head_detector(train, embedder, {"human", "machine"}, seed);
}

std::string to_string(HmgcRegime r) { return r == HmgcRegime::standard ? "standard" : "mismatched"; }

HmgcRegime hmgc_regime(const HeadDetector& surrogate, const Corpus& attacked) {
  return surrogate.trained_on() == attacked.name() ? HmgcRegime::standard : HmgcRegime::mismatched;
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

ExternalDetector::ExternalDetector(ExternalDetectorRef ref, lm::EndpointConfig transport, bool cache)
    : ref_(std::move(ref)), cache_enabled_(cache) {
  if (ref_.score_direction == Direction::feature_vector) throw InputError("external detectors return scalars");
  auto [base, path] = split_url(ref_.endpoint);
  transport.base_url = base;
  transport.path = path;
  path_ = path;
  client_ = std::make_unique<lm::JsonClient>(std::move(transport));
  request("health check");
}

double ExternalDetector::request(const std::string& text) const {
  const auto response = client_->post(path_, {{"text", text}});
  lm::note_reported_memory(response);
  auto it = response.find("score");
  if (it == response.end() || !it->is_number()) {
    throw BackendError("detector '" + ref_.id + "' returned a non-numeric score");
  }
  const double p = it->get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    throw BackendError("detector '" + ref_.id + "' returned out-of-range score " + std::to_string(p));
  }
  return p;
}

double ExternalDetector::score(std::string_view text) const {
  lm::count_backend_call();
  std::string key(text);
  if (cache_enabled_) {
    std::lock_guard lock(cache_mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double p = request(key);
  if (cache_enabled_) {
    std::lock_guard lock(cache_mu_);
    cache_.emplace(std::move(key), p);
  }
  return p;
}

std::vector<double> ExternalDetector::score_batch(const std::vector<std::string>& texts) const {
  std::vector<double> out(texts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < texts.size(); i = next++) {
      try {
        out[i] = score(texts[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(client_->config().max_in_flight, std::max<std::size_t>(texts.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace evadebench::detectors
