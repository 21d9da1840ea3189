#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace evadebench {

enum class MemorySource { endpoint, process_rss, unavailable };
std::string to_string(MemorySource s);
MemorySource parse_memory_source(const std::string& s);

// Cost of one attack run on one sample.
struct OverheadRecord {
  std::string run_id;
  std::string attack_id;
  std::string sample_id;
  std::size_t token_length = 0;
  double wall_time = 0.0;  // seconds, monotonic clock
  std::optional<std::uint64_t> peak_memory;  // bytes; empty when unavailable
  MemorySource memory_source = MemorySource::unavailable;
  std::uint64_t backend_calls = 0;
};

struct AttackOutcome {
  std::string sample_id;
  std::string attack_id;
  nlohmann::json params = nlohmann::json::object();
  std::string attacked_text;
  OverheadRecord resource;
  nlohmann::json trace = nlohmann::json::array();
  bool no_op = false;  // the attack found nothing to change
};

nlohmann::json to_json(const OverheadRecord& r);
OverheadRecord overhead_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttackOutcome& o, bool with_trace = true);
AttackOutcome outcome_from_json(const nlohmann::json& j);

}  // namespace evadebench
