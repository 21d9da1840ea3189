#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/attacks.hpp"
#include "evadebench/text.hpp"

// Sentence-level composition of several attacks.
namespace evadebench::blending {

enum class Policy { alternate, custom };
std::string to_string(Policy p);
Policy parse_policy(const std::string& s);

using SegmentScores = std::map<std::string, double>;
// Pure function of (index, segment, scores) returning an attack id.
using CustomPolicy =
    std::function<std::string(std::size_t index, const std::string& segment, const SegmentScores* scores)>;

struct BlendPlan {
  std::vector<std::string> segments;
  std::vector<std::string> assignment;  // attack id per segment
  std::vector<std::size_t> attack_index;
  Policy policy = Policy::alternate;
};

nlohmann::json to_json(const BlendPlan& plan);

// Same splitter as the readability metric; join() of the result is the
// input byte for byte.
text::SentenceSplit segment_sentences(std::string_view text);

// Alternation assigns attack_ids[i mod n] to segment i, starting with the
// first listed attack. A custom policy must return one of attack_ids.
BlendPlan assign_by_policy(std::span<const std::string> segments, std::span<const std::string> attack_ids,
                           Policy policy, const CustomPolicy& custom = {},
                           std::span<const SegmentScores> scores = {});

struct BlendOptions {
  Policy policy = Policy::alternate;
  CustomPolicy custom;
  std::vector<SegmentScores> scores;
  // Preceding original sentences handed to each segment's attack as context.
  std::size_t context_window = 0;
};

class BlendAttack final : public attacks::Attack {
 public:
  BlendAttack(std::vector<const attacks::Attack*> attacks, BlendOptions options = {});
  std::string id() const override;
  nlohmann::json params() const override;
  BlendPlan plan_for(std::string_view text) const;

 protected:
  attacks::AttackResult do_apply(std::string_view text, const attacks::SegmentContext& context) const override;

 private:
  std::vector<const attacks::Attack*> attacks_;
  std::vector<std::string> ids_;
  BlendOptions options_;
};

AttackOutcome blend_attack(const TextSample& sample, std::vector<const attacks::Attack*> attacks,
                           BlendOptions options = {});

}  // namespace evadebench::blending
