#include "evadebench/overhead.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/random.hpp"
#include "evadebench/text.hpp"

namespace evadebench::overhead {

namespace {

std::mutex g_mode_mutex;
std::size_t g_active_runs = 0;
bool g_measuring = false;

class ExclusiveMode {
 public:
  ExclusiveMode() {
    std::lock_guard lock(g_mode_mutex);
    if (g_measuring) throw Error("another overhead measurement is already running");
    if (g_active_runs > 0) throw Error("cannot measure overhead while other attack runs share the process");
    g_measuring = true;
  }
  ~ExclusiveMode() {
    std::lock_guard lock(g_mode_mutex);
    g_measuring = false;
  }
  ExclusiveMode(const ExclusiveMode&) = delete;
  ExclusiveMode& operator=(const ExclusiveMode&) = delete;
};

}  // namespace

LengthBucketPlan default_plan() {
  LengthBucketPlan p;
  for (std::size_t l = 100; l <= 1000; l += 100) p.targets.push_back(l);
  return p;
}

void validate(const LengthBucketPlan& plan) {
  if (plan.targets.empty()) throw InputError("bucket plan has no targets");
  if (plan.targets.front() == 0) throw InputError("bucket targets must be positive");
  for (std::size_t i = 1; i < plan.targets.size(); ++i) {
    if (plan.targets[i] <= plan.targets[i - 1]) throw InputError("bucket targets must be strictly increasing");
  }
  if (plan.per_bucket_cap == 0) throw InputError("per-bucket cap must be positive");
  if (plan.width < 2) throw InputError("bucket width must be at least 2");
}

std::vector<BucketSample> sample_length_buckets(const Corpus& corpus, const LengthBucketPlan& plan,
                                                std::uint64_t seed) {
  validate(plan);
  std::vector<std::pair<std::size_t, const TextSample*>> lengths;
  lengths.reserve(corpus.size());
  for (const auto& s : corpus.samples()) lengths.emplace_back(text::token_count(s.text), &s);
  std::sort(lengths.begin(), lengths.end(),
            [](const auto& a, const auto& b) { return a.second->id < b.second->id; });

  std::vector<BucketSample> out;
  for (std::size_t target : plan.targets) {
    std::vector<std::pair<std::size_t, const TextSample*>> eligible;
    for (const auto& entry : lengths) {
      if (entry.first > target && entry.first < target + plan.width) eligible.push_back(entry);
    }
    Rng rng(mix_seed(seed, target));
    rng.shuffle(std::span(eligible));
    if (eligible.size() > plan.per_bucket_cap) eligible.resize(plan.per_bucket_cap);
    for (const auto& [len, sample] : eligible) {
      BucketSample b;
      b.target = target;
      b.original_length = len;
      b.sample = *sample;
      b.sample.text = text::truncate_tokens(sample->text, target);
      out.push_back(std::move(b));
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> bucket_counts(const LengthBucketPlan& plan,
                                                               std::span<const BucketSample> samples) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t t : plan.targets) {
    const auto n = std::count_if(samples.begin(), samples.end(), [&](const BucketSample& b) { return b.target == t; });
    out.emplace_back(t, static_cast<std::size_t>(n));
  }
  return out;
}

ActiveRun::ActiveRun() {
  std::lock_guard lock(g_mode_mutex);
  if (g_measuring) throw Error("an exclusive overhead measurement is running");
  ++g_active_runs;
}

ActiveRun::~ActiveRun() {
  std::lock_guard lock(g_mode_mutex);
  --g_active_runs;
}

std::size_t active_runs() {
  std::lock_guard lock(g_mode_mutex);
  return g_active_runs;
}

std::optional<std::uint64_t> process_peak_rss() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::uint64_t kb = 0;
      if (fields >> kb) return kb * 1024;
    }
  }
  return std::nullopt;
}

bool reset_process_peak_rss() {
  std::ofstream out("/proc/self/clear_refs");
  if (!out) return false;
  out << "5";
  out.flush();
  return static_cast<bool>(out);
}

OverheadRecord track(const std::string& attack_id, const std::string& sample_id, std::size_t token_length,
                     const std::function<void()>& invocation) {
  OverheadRecord r;
  r.attack_id = attack_id;
  r.sample_id = sample_id;
  r.token_length = token_length;
  const auto calls0 = lm::thread_backend_calls();
  const auto t0 = std::chrono::steady_clock::now();
  invocation();
  const auto t1 = std::chrono::steady_clock::now();
  r.wall_time = std::chrono::duration<double>(t1 - t0).count();
  r.backend_calls = lm::thread_backend_calls() - calls0;
  return r;
}

OverheadRecord measure(const std::string& attack_id, const std::string& sample_id, std::size_t token_length,
                       const std::function<void()>& invocation) {
  ExclusiveMode mode;
  lm::reset_endpoint_memory();
  const bool rss_reset = reset_process_peak_rss();
  auto r = track(attack_id, sample_id, token_length, invocation);
  if (const auto endpoint = lm::endpoint_peak_memory(); endpoint > 0) {
    r.peak_memory = endpoint;
    r.memory_source = MemorySource::endpoint;
  } else if (auto rss = process_peak_rss(); rss && rss_reset) {
    r.peak_memory = *rss;
    r.memory_source = MemorySource::process_rss;
  }
  return r;
}

std::vector<OverheadRow> overhead_report(std::span<const OverheadRecord> records) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const OverheadRecord*>> groups;
  for (const auto& r : records) groups[{r.attack_id, r.token_length}].push_back(&r);
  std::vector<OverheadRow> rows;
  for (const auto& [key, members] : groups) {
    OverheadRow row;
    row.attack_id = key.first;
    row.token_length = key.second;
    row.n = members.size();
    double mem = 0.0;
    std::set<std::string> sources;
    for (const auto* r : members) {
      row.wall_time += r->wall_time;
      row.backend_calls += static_cast<double>(r->backend_calls);
      if (r->peak_memory) {
        ++row.n_memory;
        mem += static_cast<double>(*r->peak_memory);
        sources.insert(to_string(r->memory_source));
      }
    }
    row.wall_time /= static_cast<double>(row.n);
    row.backend_calls /= static_cast<double>(row.n);
    if (row.n_memory > 0) row.peak_memory = mem / static_cast<double>(row.n_memory);
    row.memory_sources.assign(sources.begin(), sources.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const OverheadRow& row) {
  return {{"attack_id", row.attack_id},
          {"token_length", row.token_length},
          {"n", row.n},
          {"wall_time", row.wall_time},
          {"backend_calls", row.backend_calls},
          {"n_memory", row.n_memory},
          {"peak_memory", row.peak_memory ? nlohmann::json(*row.peak_memory) : nlohmann::json(nullptr)},
          {"memory_sources", row.memory_sources}};
}

std::string overhead_csv(std::span<const OverheadRow> rows, const std::string& metric) {
  if (metric != "wall_time" && metric != "backend_calls" && metric != "peak_memory") {
    throw InputError("unknown overhead metric '" + metric + "'");
  }
  std::set<std::string> attacks;
  std::set<std::size_t> lengths;
  std::map<std::pair<std::size_t, std::string>, std::optional<double>> cell;
  for (const auto& r : rows) {
    attacks.insert(r.attack_id);
    lengths.insert(r.token_length);
    std::optional<double> v;
    if (metric == "wall_time") v = r.wall_time;
    else if (metric == "backend_calls") v = r.backend_calls;
    else v = r.peak_memory;
    cell[{r.token_length, r.attack_id}] = v;
  }
  std::ostringstream out;
  out.precision(17);
  out << "token_length";
  for (const auto& a : attacks) out << ',' << a;
  out << '\n';
  for (auto l : lengths) {
    out << l;
    for (const auto& a : attacks) {
      out << ',';
      auto it = cell.find({l, a});
      if (it != cell.end() && it->second) out << *it->second;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace evadebench::overhead
