#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/corpus.hpp"
#include "evadebench/records.hpp"

namespace evadebench::overhead {

struct LengthBucketPlan {
  std::vector<std::size_t> targets;  // strictly increasing token lengths
  std::size_t per_bucket_cap = 10;
  std::size_t width = 100;  // eligible: target < length < target + width
};

// Targets 100, 200, ..., 1000 with 10 samples each.
LengthBucketPlan default_plan();
void validate(const LengthBucketPlan& plan);

struct BucketSample {
  std::size_t target = 0;
  std::size_t original_length = 0;
  TextSample sample;  // text truncated to exactly `target` tokens
};

// Buckets may come back short or empty; that is reported, not an error.
// Selection is a pure function of (corpus contents, plan, seed), independent
// of sample order.
std::vector<BucketSample> sample_length_buckets(const Corpus& corpus, const LengthBucketPlan& plan,
                                                std::uint64_t seed);

// Counts per target, zero for empty buckets.
std::vector<std::pair<std::size_t, std::size_t>> bucket_counts(const LengthBucketPlan& plan,
                                                               std::span<const BucketSample> samples);

// Marks an attack run as in flight for the lifetime of the guard. Throws
// Error while an exclusive measurement is running.
class ActiveRun {
 public:
  ActiveRun();
  ~ActiveRun();
  ActiveRun(const ActiveRun&) = delete;
  ActiveRun& operator=(const ActiveRun&) = delete;
};

std::size_t active_runs();

// Runs `invocation` in exclusive measurement mode and records wall time
// (steady clock), backend calls made by this thread and peak memory.
// Memory is endpoint-reported when any backend reported it, otherwise the
// process high-water mark, otherwise marked unavailable. Throws Error when
// another attack run or measurement is active.
OverheadRecord measure(const std::string& attack_id, const std::string& sample_id, std::size_t token_length,
                       const std::function<void()>& invocation);

// Non-exclusive variant used when attacks run concurrently: wall time and
// this thread's backend calls only, memory always unavailable.
OverheadRecord track(const std::string& attack_id, const std::string& sample_id, std::size_t token_length,
                     const std::function<void()>& invocation);

// Peak resident set size of this process in bytes, if the OS exposes it.
std::optional<std::uint64_t> process_peak_rss();
// Asks the OS to restart peak tracking; false when unsupported.
bool reset_process_peak_rss();

struct OverheadRow {
  std::string attack_id;
  std::size_t token_length = 0;
  std::size_t n = 0;
  double wall_time = 0.0;
  double backend_calls = 0.0;
  std::size_t n_memory = 0;  // records that carried a memory figure
  std::optional<double> peak_memory;
  std::vector<std::string> memory_sources;
};

// Mean per (attack_id, token_length), sorted by attack then length.
std::vector<OverheadRow> overhead_report(std::span<const OverheadRecord> records);

nlohmann::json to_json(const OverheadRow& row);
// Length x attack table of mean wall time (or backend calls / memory).
std::string overhead_csv(std::span<const OverheadRow> rows, const std::string& metric = "wall_time");

}  // namespace evadebench::overhead
