#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/store.hpp"

using namespace evadebench;
using namespace evadebench::store;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("evadebench_store_" + name);
  fs::remove_all(d);
  return d;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST(Store, ConfigHashIsKeyOrderFree) {
  EXPECT_EQ(config_hash(json::parse(R"({"a":1,"b":[1,2]})")), config_hash(json::parse(R"({"b":[1,2],"a":1})")));
  EXPECT_NE(config_hash(json{{"a", 1}}), config_hash(json{{"a", 2}}));
}

TEST(Store, AppendOnlyAcrossRuns) {
  const auto dir = fresh_dir("append");
  const json config = {{"seed", 1}};
  auto first = ResultsStore::open(dir, config, "score");
  first.append(Stream::scores, {{"v", 1}});
  first.append(Stream::scores, {{"v", 2}});
  first.close_run();
  auto second = ResultsStore::open(dir, config, "score");
  EXPECT_NE(first.run_id(), second.run_id());
  second.append(Stream::scores, {{"v", 3}});
  second.close_run();
  EXPECT_EQ(line_count(second.path_of(Stream::scores)), 3u);
  const auto view = ResultsStore::inspect(dir, config);
  EXPECT_EQ(view.latest_run(Stream::scores), second.run_id());
  EXPECT_EQ(view.read(Stream::scores).size(), 1u);
  EXPECT_EQ(view.read(Stream::scores, first.run_id()).size(), 2u);
  EXPECT_EQ(view.read(Stream::scores).front().at("run_id"), second.run_id());
}

TEST(Store, HashMismatchAndMissingStreams) {
  const auto dir = fresh_dir("mismatch");
  ResultsStore::open(dir, json{{"seed", 1}}, "ingest").close_run();
  EXPECT_THROW(ResultsStore::open(dir, json{{"seed", 2}}, "ingest"), InputError);
  EXPECT_THROW(ResultsStore::inspect(dir, json{{"seed", 2}}), InputError);
  EXPECT_THROW(ResultsStore::inspect(fresh_dir("absent"), json{}), InputError);
  const auto s = ResultsStore::inspect(dir, json{{"seed", 1}});
  try {
    s.read(Stream::outcomes);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("outcomes"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("attack"), std::string::npos);
  }
  EXPECT_THROW(parse_stream("nope"), InputError);
  EXPECT_EQ(parse_stream(to_string(Stream::overhead)), Stream::overhead);
}

TEST(Store, CorruptLineNamesTheLine) {
  const auto dir = fresh_dir("corrupt");
  auto s = ResultsStore::open(dir, json::object(), "eval");
  s.append(Stream::eval, {{"x", 1}});
  {
    std::ofstream out(s.path_of(Stream::eval), std::ios::app);
    out << "{broken\n";
  }
  try {
    s.read(Stream::eval);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
