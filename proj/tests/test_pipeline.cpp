#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/pipeline.hpp"
#include "evadebench/store.hpp"
#include "evadebench/synthetic.hpp"

using namespace evadebench;
using namespace evadebench::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Bench {
  fs::path dir;
  json config;
};

const Bench& bench() {
  static const Bench b = [] {
    Bench out;
    out.dir = fs::temp_directory_path() / "evadebench_pipeline_bench";
    fs::remove_all(out.dir);
    synthetic::SyntheticOptions o;
    o.seed = 3;
    o.n_human = o.n_machine = 30;
    synthetic::write_benchmark(out.dir, o);
    out.config = load_config(out.dir / "config.json");
    out.config["detectors"] = {"log_likelihood", "binoculars", "gltr"};
    out.config["overhead"]["per_bucket_cap"] = 2;
    return out;
  }();
  return b;
}

fs::path fresh(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("evadebench_pipeline_" + name);
  fs::remove_all(d);
  return d;
}

// Stream contents with run ids and timings dropped.
std::vector<json> stable(const fs::path& out, const json& config, store::Stream s) {
  auto rows = store::ResultsStore::inspect(out, config).read(s);
  for (auto& r : rows) {
    r.erase("run_id");
    if (r.contains("resource")) r["resource"].erase("wall_time");
  }
  return rows;
}

void run_all(const fs::path& out, const json& config, const fs::path& base) {
  for (const char* c : {"ingest", "attack", "score", "eval", "quality", "overhead", "report"}) {
    run_command(c, config, base, out);
  }
}

}  // namespace

TEST(Pipeline, EndToEndWritesEveryTable) {
  const auto& b = bench();
  const auto out = fresh("e2e");
  run_all(out, b.config, b.dir);
  for (const char* f : {"eval.csv", "eval_by_attack.csv", "quality.csv", "overhead_time.csv", "overhead_calls.csv",
                        "overhead_memory.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(out / "report" / f)) << f;
  }
  std::ifstream in(out / "report" / "summary.json");
  const auto summary = json::parse(in);
  const auto& auc = summary.at("mean_auc");
  EXPECT_GT(auc.at("clean").get<double>(), auc.at("raft").get<double>());
  EXPECT_EQ(summary.at("summary").at("rows").size(), 2u);
}

TEST(Pipeline, ReplayIsDeterministic) {
  const auto& b = bench();
  const auto first = fresh("replay_a"), second = fresh("replay_b");
  for (const auto& out : {first, second}) {
    for (const char* c : {"ingest", "attack", "score", "eval"}) run_command(c, b.config, b.dir, out);
  }
  for (auto s : {store::Stream::samples, store::Stream::outcomes, store::Stream::scores, store::Stream::eval}) {
    EXPECT_EQ(stable(first, b.config, s), stable(second, b.config, s)) << store::to_string(s);
  }
}

TEST(Pipeline, MissingUpstreamStreamIsNamed) {
  const auto& b = bench();
  const auto out = fresh("missing");
  run_command("ingest", b.config, b.dir, out);
  try {
    run_command("eval", b.config, b.dir, out);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("scores"), std::string::npos);
  }
  auto changed = b.config;
  changed["seed"] = 99;
  EXPECT_THROW(run_command("attack", changed, b.dir, out), InputError);
}

TEST(Pipeline, ConfigValidation) {
  const auto& b = bench();
  EXPECT_NO_THROW(validate_config(b.config));
  auto bad = b.config;
  bad["detectors"] = {"not_a_detector"};
  EXPECT_THROW(validate_config(bad), InputError);
  bad = b.config;
  bad["attacks"]["warp"] = json::object();
  EXPECT_THROW(validate_config(bad), InputError);
  bad = b.config;
  bad["backends"]["scoring"] = "ghost";
  EXPECT_THROW(validate_config(bad), InputError);
  bad = b.config;
  bad.erase("datasets");
  EXPECT_THROW(validate_config(bad), InputError);
  EXPECT_THROW(run_command("dance", b.config, b.dir, fresh("dance")), InputError);
}

TEST(Pipeline, BlendOverrideRunsAlternation) {
  const auto& b = bench();
  const auto out = fresh("blend");
  run_command("ingest", b.config, b.dir, out);
  Overrides o;
  o.attacks = {"dipper"};
  o.blend = {"dipper", "raft"};
  run_command("attack", b.config, b.dir, out, o);
  const auto rows = store::ResultsStore::inspect(out, b.config).read(store::Stream::outcomes);
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.at("attack_id").get<std::string>());
  EXPECT_TRUE(ids.count("blend(dipper,raft)"));
  o.blend_policy = "custom";
  EXPECT_THROW(run_command("attack", b.config, b.dir, out, o), InputError);
}
