#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Append-only results directory: one JSONL file per stream plus a manifest
// holding the config hash and the list of runs.
namespace evadebench::store {

enum class Stream { samples, scores, outcomes, quality, eval, overhead, scenario };
std::string to_string(Stream s);
Stream parse_stream(const std::string& s);

// Hex FNV-1a of the canonical (sorted-key) dump.
std::string config_hash(const nlohmann::json& config);

class ResultsStore {
 public:
  // Creates the directory and manifest on first use. A manifest written for
  // a different config is an InputError. Every open starts a new run id.
  static ResultsStore open(const std::filesystem::path& dir, const nlohmann::json& config,
                           const std::string& command);
  // Read-only access that still enforces the config hash.
  static ResultsStore inspect(const std::filesystem::path& dir, const nlohmann::json& config);

  const std::string& run_id() const { return run_id_; }
  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  // Stamps the record with run_id and appends one line.
  void append(Stream s, nlohmann::json record);
  void append_all(Stream s, const std::vector<nlohmann::json>& records);

  // Latest run that wrote to the stream, if any.
  std::optional<std::string> latest_run(Stream s) const;
  // Records of one run (default: latest). Missing stream is an InputError
  // naming it and the subcommand that produces it.
  std::vector<nlohmann::json> read(Stream s, std::optional<std::string> run = std::nullopt) const;
  bool has(Stream s) const { return latest_run(s).has_value(); }

  std::filesystem::path path_of(Stream s) const;
  // Finishes the run entry in the manifest.
  void close_run(const nlohmann::json& summary = nlohmann::json::object());

 private:
  ResultsStore() = default;
  void load_manifest();
  void save_manifest() const;

  std::filesystem::path dir_;
  std::string hash_;
  std::string run_id_;
  nlohmann::json manifest_;
};

// Subcommand that produces a stream, used in error messages.
std::string producer_of(Stream s);

}  // namespace evadebench::store
