#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/pipeline.hpp"
#include "evadebench/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evadebench;

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const BackendError*>(&e)) return 3;
  return 1;
}

const char* kind_of(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return "input";
  if (dynamic_cast<const BackendError*>(&e)) return "backend";
  if (dynamic_cast<const DegenerateError*>(&e)) return "degenerate";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for detector-evading attacks on machine-generated text"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset, blend_policy;
  std::vector<std::string> detectors_sel, attacks_sel, blend;
  bool qpa = false, trace = false;
  std::uint64_t seed = 0;

  std::vector<CLI::App*> subs;
  for (const auto& name : pipeline::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "results store directory")->required();
    sub->add_option("--dataset", dataset, "restrict to one dataset");
    sub->add_option("--detector", detectors_sel, "detector names (comma separated)")->delimiter(',');
    sub->add_option("--attack", attacks_sel, "attack names (comma separated)")->delimiter(',');
    sub->add_flag("--qpa", qpa, "also run the quality-preserving variants");
    sub->add_option("--blend", blend, "attacks to blend sentence by sentence")->delimiter(',');
    sub->add_option("--blend-policy", blend_policy, "blend assignment policy");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_flag("--trace", trace, "store per-step attack traces");
    subs.push_back(sub);
  }
  std::string synth_dir;
  std::uint64_t synth_seed = 1;
  std::size_t per_class = 200;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus, reference models and config");
  synth_cmd->add_option("--out", synth_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--per-class", per_class, "samples per class");

  CLI11_PARSE(app, argc, argv);

  try {
    json result;
    if (synth_cmd->parsed()) {
      synthetic::SyntheticOptions o;
      o.seed = synth_seed;
      o.n_human = o.n_machine = per_class;
      result = synthetic::write_benchmark(synth_dir, o);
    } else {
      const auto* sub = app.get_subcommands().front();
      pipeline::Overrides o;
      if (!dataset.empty()) o.dataset = dataset;
      o.detectors = detectors_sel;
      o.attacks = attacks_sel;
      o.qpa = qpa;
      o.blend = blend;
      if (!blend_policy.empty()) o.blend_policy = blend_policy;
      if (sub->count("--seed") > 0) o.seed = seed;
      o.trace = trace;
      const fs::path cfg = fs::absolute(config_path);
      result = pipeline::run_command(sub->get_name(), pipeline::load_config(cfg), cfg.parent_path(), out_dir, o);
    }
    std::cout << result.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", kind_of(e)}}.dump() << "\n";
    return exit_code_for(e);
  }
}
