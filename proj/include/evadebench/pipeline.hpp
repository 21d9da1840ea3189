#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evadebench/attacks.hpp"
#include "evadebench/corpus.hpp"
#include "evadebench/lm.hpp"
#include "evadebench/model_detectors.hpp"
#include "evadebench/store.hpp"
#include "evadebench/text_detector.hpp"

// Config-driven orchestration behind the command-line tool: builds
// backends, detectors and attacks from a JSON config and runs one
// subcommand against a results store.
namespace evadebench::pipeline {

// Per-invocation selections; they narrow or extend the config without
// changing its hash.
struct Overrides {
  std::optional<std::string> dataset;
  std::vector<std::string> detectors;
  std::vector<std::string> attacks;
  bool qpa = false;
  std::vector<std::string> blend;
  std::optional<std::string> blend_policy;
  std::optional<std::uint64_t> seed;
  bool trace = false;
};

nlohmann::json to_json(const Overrides& o);

nlohmann::json load_config(const std::filesystem::path& path);
// Throws InputError naming the first unknown registry name or missing field.
void validate_config(const nlohmann::json& config);

std::vector<std::string> command_names();

class Harness {
 public:
  Harness(nlohmann::json config, std::filesystem::path base_dir, Overrides overrides = {});
  ~Harness();
  Harness(const Harness&) = delete;
  Harness& operator=(const Harness&) = delete;

  const nlohmann::json& config() const { return config_; }
  std::uint64_t seed() const;

  // Subcommands. Each reads and writes only its declared streams and
  // returns a small summary.
  nlohmann::json ingest(store::ResultsStore& store);
  nlohmann::json attack(store::ResultsStore& store);
  nlohmann::json score(store::ResultsStore& store);
  nlohmann::json quality(store::ResultsStore& store);
  nlohmann::json eval(store::ResultsStore& store);
  nlohmann::json overhead(store::ResultsStore& store);
  nlohmann::json scenario(store::ResultsStore& store);
  // Writes CSV / JSON tables under <store>/report and returns the summary.
  nlohmann::json report(const store::ResultsStore& store);

  // Building blocks, also used by the bindings and tests.
  const Corpus& corpus() const;  // latest ingested corpus (after ingest or load_corpus)
  void load_corpus(const store::ResultsStore& store);
  const lm::LanguageModel& model(const std::string& id);
  const lm::LanguageModel& scoring_model();
  const lm::LanguageModel& quality_model();
  const lm::Rewriter& rewriter();
  const lm::Embedder& embedder();
  const attacks::CandidateGenerator& candidates();
  detectors::MetricBackends metric_backends();
  // Detector by name, training it on the train split when needed.
  const detectors::TextDetector& detector(const std::string& name);
  std::unique_ptr<attacks::Attack> make_attack(const std::string& name, bool qpa);
  std::vector<std::string> selected_detectors() const;
  std::vector<std::string> selected_attacks() const;

 private:
  struct State;
  nlohmann::json config_;
  std::filesystem::path base_dir_;
  Overrides overrides_;
  std::unique_ptr<State> state_;
};

// Opens the store, runs the subcommand and closes the run. `report` only
// inspects the store.
nlohmann::json run_command(const std::string& command, const nlohmann::json& config,
                           const std::filesystem::path& base_dir, const std::filesystem::path& out_dir,
                           const Overrides& overrides = {});

}  // namespace evadebench::pipeline
