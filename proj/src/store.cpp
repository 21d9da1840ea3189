#include "evadebench/store.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "evadebench/errors.hpp"
#include "evadebench/random.hpp"

namespace evadebench::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

struct StreamName {
  Stream stream;
  const char* name;
  const char* producer;
};

constexpr StreamName kStreams[] = {
    {Stream::samples, "samples", "ingest"},    {Stream::scores, "scores", "score"},
    {Stream::outcomes, "outcomes", "attack"},  {Stream::quality, "quality", "quality"},
    {Stream::eval, "eval", "eval"},            {Stream::overhead, "overhead", "overhead"},
    {Stream::scenario, "scenario", "scenario"},
};

}  // namespace

std::string to_string(Stream s) {
  for (const auto& e : kStreams) {
    if (e.stream == s) return e.name;
  }
  return "unknown";
}

Stream parse_stream(const std::string& s) {
  for (const auto& e : kStreams) {
    if (s == e.name) return e.stream;
  }
  throw InputError("unknown stream '" + s + "'");
}

std::string producer_of(Stream s) {
  for (const auto& e : kStreams) {
    if (e.stream == s) return e.producer;
  }
  return "unknown";
}

std::string config_hash(const json& config) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
  return o.str();
}

void ResultsStore::load_manifest() {
  const auto path = dir_ / kManifest;
  if (!fs::exists(path)) {
    manifest_ = json::object();
    return;
  }
  std::ifstream in(path);
  try {
    manifest_ = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("unreadable manifest " + path.string() + ": " + e.what());
  }
}

void ResultsStore::save_manifest() const {
  const auto path = dir_ / kManifest;
  const auto tmp = dir_ / (std::string(kManifest) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << manifest_.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

ResultsStore ResultsStore::inspect(const fs::path& dir, const json& config) {
  ResultsStore s;
  s.dir_ = dir;
  s.hash_ = config_hash(config);
  if (!fs::exists(dir / kManifest)) throw InputError("no results store at " + dir.string());
  s.load_manifest();
  const auto recorded = s.manifest_.value("config_hash", "");
  if (recorded != s.hash_) {
    throw InputError("config hash " + s.hash_ + " does not match the store's manifest (" + recorded + ")");
  }
  return s;
}

ResultsStore ResultsStore::open(const fs::path& dir, const json& config, const std::string& command) {
  ResultsStore s;
  s.dir_ = dir;
  s.hash_ = config_hash(config);
  fs::create_directories(dir);
  s.load_manifest();
  if (s.manifest_.empty()) {
    s.manifest_ = {{"format", "evadebench-store"}, {"version", 1}, {"config_hash", s.hash_},
                   {"config", config}, {"runs", json::array()}};
  } else if (s.manifest_.value("config_hash", "") != s.hash_) {
    throw InputError("config hash " + s.hash_ + " does not match the store's manifest (" +
                     s.manifest_.value("config_hash", "") + ")");
  }
  auto& runs = s.manifest_["runs"];
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%04zu", runs.size() + 1);
  s.run_id_ = buf;
  runs.push_back({{"run_id", s.run_id_}, {"command", command}, {"streams", json::array()}, {"complete", false}});
  s.save_manifest();
  return s;
}

fs::path ResultsStore::path_of(Stream s) const { return dir_ / (to_string(s) + ".jsonl"); }

void ResultsStore::append(Stream s, json record) {
  append_all(s, {std::move(record)});
}

void ResultsStore::append_all(Stream s, const std::vector<json>& records) {
  if (run_id_.empty()) throw Error("store opened read-only");
  std::ofstream out(path_of(s), std::ios::app);
  if (!out) throw Error("cannot append to " + path_of(s).string());
  for (auto r : records) {
    r["run_id"] = run_id_;
    out << r.dump() << '\n';
  }
  out.flush();
  if (!out) throw Error("write failed for " + path_of(s).string());
  auto& run = manifest_["runs"].back();
  auto& streams = run["streams"];
  const auto name = to_string(s);
  if (std::find(streams.begin(), streams.end(), name) == streams.end()) {
    streams.push_back(name);
    save_manifest();
  }
}

std::optional<std::string> ResultsStore::latest_run(Stream s) const {
  const auto name = to_string(s);
  const auto& runs = manifest_.at("runs");
  for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
    const auto& streams = (*it)["streams"];
    if (std::find(streams.begin(), streams.end(), name) != streams.end()) {
      return (*it)["run_id"].get<std::string>();
    }
  }
  return std::nullopt;
}

std::vector<json> ResultsStore::read(Stream s, std::optional<std::string> run) const {
  if (!run) run = latest_run(s);
  if (!run) {
    throw InputError("missing upstream stream '" + to_string(s) + "' (run `" + producer_of(s) + "` first)");
  }
  std::ifstream in(path_of(s));
  if (!in) throw InputError("stream file " + path_of(s).string() + " is missing");
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(path_of(s).string() + " line " + std::to_string(n) + ": " + e.what());
    }
    if (j.value("run_id", "") == *run) out.push_back(std::move(j));
  }
  return out;
}

void ResultsStore::close_run(const json& summary) {
  if (run_id_.empty()) return;
  auto& run = manifest_["runs"].back();
  run["complete"] = true;
  if (!summary.empty()) run["summary"] = summary;
  save_manifest();
}

}  // namespace evadebench::store
