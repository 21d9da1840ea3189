#include "evadebench/blending.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"

namespace evadebench::blending {

using nlohmann::json;

std::string to_string(Policy p) { return p == Policy::alternate ? "alternate" : "custom"; }

Policy parse_policy(const std::string& s) {
  if (s == "alternate") return Policy::alternate;
  if (s == "custom") return Policy::custom;
  throw InputError("unknown blend policy '" + s + "'");
}

json to_json(const BlendPlan& plan) {
  return {{"segments", plan.segments},
          {"assignment", plan.assignment},
          {"attack_index", plan.attack_index},
          {"policy", to_string(plan.policy)}};
}

text::SentenceSplit segment_sentences(std::string_view t) { return text::split_sentences(t); }

BlendPlan assign_by_policy(std::span<const std::string> segments, std::span<const std::string> attack_ids,
                           Policy policy, const CustomPolicy& custom, std::span<const SegmentScores> scores) {
  if (attack_ids.empty()) throw InputError("blending needs at least one attack");
  if (!scores.empty() && scores.size() != segments.size()) throw InputError("one score map per segment expected");
  if (policy == Policy::custom && !custom) throw InputError("custom blend policy without a policy function");
  BlendPlan plan;
  plan.policy = policy;
  plan.segments.assign(segments.begin(), segments.end());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    std::size_t k = 0;
    if (policy == Policy::alternate) {
      k = i % attack_ids.size();
    } else {
      const std::string chosen = custom(i, segments[i], scores.empty() ? nullptr : &scores[i]);
      const auto it = std::find(attack_ids.begin(), attack_ids.end(), chosen);
      if (it == attack_ids.end()) throw InputError("blend policy chose unknown attack '" + chosen + "'");
      k = static_cast<std::size_t>(it - attack_ids.begin());
    }
    plan.attack_index.push_back(k);
    plan.assignment.push_back(attack_ids[k]);
  }
  return plan;
}

BlendAttack::BlendAttack(std::vector<const attacks::Attack*> attacks, BlendOptions options)
    : attacks_(std::move(attacks)), options_(std::move(options)) {
  if (attacks_.empty()) throw InputError("blending needs at least one attack");
  for (const auto* a : attacks_) {
    if (a == nullptr) throw InputError("null attack in blend");
    ids_.push_back(a->id());
  }
  if (options_.policy == Policy::custom && !options_.custom) throw InputError("custom blend policy without a function");
}

std::string BlendAttack::id() const {
  std::string s = "blend(";
  for (std::size_t i = 0; i < ids_.size(); ++i) s += (i ? "," : "") + ids_[i];
  return s + ")";
}

json BlendAttack::params() const {
  json parts = json::array();
  for (const auto* a : attacks_) parts.push_back({{"attack", a->id()}, {"params", a->params()}});
  return {{"attacks", parts}, {"policy", to_string(options_.policy)}, {"context_window", options_.context_window}};
}

BlendPlan BlendAttack::plan_for(std::string_view t) const {
  const auto split = segment_sentences(t);
  return assign_by_policy(split.sentences, ids_, options_.policy, options_.custom, options_.scores);
}

attacks::AttackResult BlendAttack::do_apply(std::string_view t, const attacks::SegmentContext&) const {
  auto split = segment_sentences(t);
  const auto plan = assign_by_policy(split.sentences, ids_, options_.policy, options_.custom, options_.scores);
  attacks::AttackResult r;
  r.trace.push_back({{"plan", to_json(plan)}});
  const auto original = split.sentences;
  bool any_change = false;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& attack = *attacks_[plan.attack_index[i]];
    attacks::SegmentContext ctx;
    const std::size_t first = i > options_.context_window ? i - options_.context_window : 0;
    for (std::size_t j = first; j < i; ++j) ctx.preceding += (j > first ? " " : "") + original[j];
    attacks::AttackResult part;
    const std::string where = "segment " + std::to_string(i) + " (" + attack.id() + "): ";
    try {
      part = attack.apply(original[i], ctx);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    } catch (const BackendError& e) {
      throw BackendError(where + e.what());
    } catch (const DegenerateError& e) {
      throw DegenerateError(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
    if (!part.no_op && part.text != original[i]) any_change = true;
    r.trace.push_back({{"segment", i}, {"attack", attack.id()}, {"input", original[i]}, {"output", part.text},
                       {"trace", part.trace}});
    split.sentences[i] = std::move(part.text);
  }
  r.text = split.join();
  r.no_op = !any_change;
  return r;
}

AttackOutcome blend_attack(const TextSample& sample, std::vector<const attacks::Attack*> attacks,
                           BlendOptions options) {
  BlendAttack blend(std::move(attacks), std::move(options));
  return attacks::run_attack(blend, sample);
}

}  // namespace evadebench::blending
