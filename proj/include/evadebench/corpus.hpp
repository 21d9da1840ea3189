#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evadebench {

enum class Label { human, machine };
enum class Split { train, test, unassigned };

std::string to_string(Label label);
std::string to_string(Split split);
Label parse_label(const std::string& s);
Split parse_split(const std::string& s);

struct TextSample {
  std::string id;
  std::string text;
  Label label = Label::human;
  std::optional<std::string> generator;  // present iff label == machine
  std::string dataset;
  std::string domain;
  Split split = Split::unassigned;

  friend bool operator==(const TextSample&, const TextSample&) = default;
};

// Throws InputError when a TextSample invariant does not hold.
void validate(const TextSample& sample);

nlohmann::json to_json(const TextSample& sample);
TextSample sample_from_json(const nlohmann::json& record);

// Immutable once built; share freely between readers.
class Corpus {
 public:
  Corpus() = default;
  // Validates every sample and rejects duplicate ids.
  Corpus(std::string name, std::vector<TextSample> samples, std::uint64_t split_seed = 0);

  const std::string& name() const { return name_; }
  const std::vector<TextSample>& samples() const { return samples_; }
  std::uint64_t split_seed() const { return split_seed_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TextSample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  const TextSample* find(const std::string& id) const;

 private:
  std::string name_;
  std::vector<TextSample> samples_;
  std::uint64_t split_seed_ = 0;
};

// JSON Lines, one TextSample per line. Errors carry the 1-based line number.
// Splits recorded in the file are reset to unassigned unless `keep_splits`
// is set (used when reading back a corpus the harness itself split).
Corpus ingest(const std::filesystem::path& path, std::string name = {}, bool keep_splits = false);
Corpus ingest_stream(std::istream& in, std::string name, bool keep_splits = false);
void serialize(const Corpus& corpus, std::ostream& out);
void serialize(const Corpus& corpus, const std::filesystem::path& path);

// Stratified per (dataset, generator). Within a stratum samples are sorted
// by id and shuffled with a seed derived from `seed` and the stratum key, so
// the result does not depend on input order. train = round(ratio * size).
Corpus assign_splits(const Corpus& corpus, double ratio, std::uint64_t seed);

struct SampleFilter {
  std::optional<std::string> dataset;
  std::optional<std::string> generator;
  std::optional<Label> label;
  std::optional<Split> split;

  bool matches(const TextSample& s) const;
};

Corpus filter(const Corpus& corpus, const SampleFilter& f);
Corpus filter(const Corpus& corpus, const std::function<bool(const TextSample&)>& pred);

// Stratum key used by assign_splits; humans have no generator.
std::string stratum_key(const TextSample& s);

}  // namespace evadebench
