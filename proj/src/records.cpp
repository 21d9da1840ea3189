#include "evadebench/records.hpp"

#include "evadebench/errors.hpp"

namespace evadebench {

using nlohmann::json;

std::string to_string(MemorySource s) {
  switch (s) {
    case MemorySource::endpoint:
      return "endpoint";
    case MemorySource::process_rss:
      return "process_rss";
    case MemorySource::unavailable:
      break;
  }
  return "unavailable";
}

MemorySource parse_memory_source(const std::string& s) {
  if (s == "endpoint") return MemorySource::endpoint;
  if (s == "process_rss") return MemorySource::process_rss;
  if (s == "unavailable") return MemorySource::unavailable;
  throw InputError("unknown memory source '" + s + "'");
}

json to_json(const OverheadRecord& r) {
  return {{"run_id", r.run_id},
          {"attack_id", r.attack_id},
          {"sample_id", r.sample_id},
          {"token_length", r.token_length},
          {"wall_time", r.wall_time},
          {"peak_memory", r.peak_memory ? json(*r.peak_memory) : json(nullptr)},
          {"memory_source", to_string(r.memory_source)},
          {"backend_calls", r.backend_calls}};
}

OverheadRecord overhead_from_json(const json& j) {
  OverheadRecord r;
  r.run_id = j.value("run_id", "");
  r.attack_id = j.at("attack_id").get<std::string>();
  r.sample_id = j.at("sample_id").get<std::string>();
  r.token_length = j.at("token_length").get<std::size_t>();
  r.wall_time = j.at("wall_time").get<double>();
  if (!j.at("peak_memory").is_null()) r.peak_memory = j.at("peak_memory").get<std::uint64_t>();
  r.memory_source = parse_memory_source(j.at("memory_source").get<std::string>());
  r.backend_calls = j.at("backend_calls").get<std::uint64_t>();
  return r;
}

json to_json(const AttackOutcome& o, bool with_trace) {
  json j = {{"sample_id", o.sample_id},       {"attack_id", o.attack_id},
            {"params", o.params},             {"attacked_text", o.attacked_text},
            {"resource", to_json(o.resource)}, {"no_op", o.no_op}};
  if (with_trace) j["trace"] = o.trace;
  return j;
}

AttackOutcome outcome_from_json(const json& j) {
  AttackOutcome o;
  o.sample_id = j.at("sample_id").get<std::string>();
  o.attack_id = j.at("attack_id").get<std::string>();
  o.params = j.value("params", json::object());
  o.attacked_text = j.at("attacked_text").get<std::string>();
  o.resource = overhead_from_json(j.at("resource"));
  o.trace = j.value("trace", json::array());
  o.no_op = j.value("no_op", false);
  return o;
}

}  // namespace evadebench
