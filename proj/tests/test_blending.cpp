#include <gtest/gtest.h>

#include "evadebench/blending.hpp"
#include "evadebench/errors.hpp"
#include "evadebench/reference.hpp"
#include "support.hpp"

using namespace evadebench;
using namespace evadebench::blending;

namespace {

// Upper-cases its input; tags which attack touched a segment.
class Upper final : public attacks::Attack {
 public:
  explicit Upper(std::string id) : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  nlohmann::json params() const override { return nlohmann::json::object(); }
  mutable std::vector<std::string> contexts;

 protected:
  attacks::AttackResult do_apply(std::string_view text, const attacks::SegmentContext& ctx) const override {
    contexts.push_back(ctx.preceding);
    std::string s(text);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return {id_ + ":" + s, nlohmann::json::array(), false};
  }

 private:
  std::string id_;
};

}  // namespace

TEST(Blend, AlternationAndByteExactReassembly) {
  Upper a("A"), b("B");
  BlendAttack blend({&a, &b});
  const std::string text = "One.  Two!\nThree? Four.";
  const auto plan = blend.plan_for(text);
  EXPECT_EQ(plan.assignment, (std::vector<std::string>{"A", "B", "A", "B"}));
  const auto r = blend.apply(text);
  EXPECT_EQ(r.text, "A:ONE.  B:TWO!\nA:THREE? B:FOUR.");
  EXPECT_EQ(blend.id(), "blend(A,B)");
}

TEST(Blend, IdentityAttacksReproduceInputExactly) {
  attacks::IdentityAttack id1, id2;
  BlendAttack blend({&id1, &id2});
  const std::string text = "  Lead space. Mid\ttab!  \n\"Quote.\" Tail without stop  ";
  EXPECT_EQ(blend.apply(text).text, text);
}

TEST(Blend, CustomPolicyAndValidation) {
  const std::vector<std::string> segs = {"x", "yy", "zzz"};
  const std::vector<std::string> ids = {"A", "B"};
  const auto plan = assign_by_policy(segs, ids, Policy::custom, [](std::size_t, const std::string& s, const SegmentScores*) {
    return s.size() > 1 ? std::string("B") : std::string("A");
  });
  EXPECT_EQ(plan.assignment, (std::vector<std::string>{"A", "B", "B"}));
  EXPECT_EQ(plan.attack_index, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_THROW(assign_by_policy(segs, ids, Policy::custom,
                                [](std::size_t, const std::string&, const SegmentScores*) { return std::string("C"); }),
               InputError);
  EXPECT_THROW(assign_by_policy(segs, ids, Policy::custom), InputError);
  EXPECT_THROW(parse_policy("random"), InputError);
}

TEST(Blend, ContextWindowPassesPrecedingSentences) {
  Upper a("A");
  BlendOptions o;
  o.context_window = 1;
  BlendAttack blend({&a}, o);
  blend.apply("First. Second. Third.");
  EXPECT_EQ(a.contexts, (std::vector<std::string>{"", "First.", "Second."}));
}

TEST(Blend, SegmentErrorsNameTheSegment) {
  attacks::IdentityAttack id;
  class Failing final : public attacks::Attack {
   public:
    std::string id() const override { return "fail"; }
    nlohmann::json params() const override { return {}; }

   protected:
    attacks::AttackResult do_apply(std::string_view, const attacks::SegmentContext&) const override {
      throw BackendError("boom");
    }
  } failing;
  BlendAttack blend({&id, &failing});
  try {
    blend.apply("One. Two.");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("segment 1"), std::string::npos);
  }
}

TEST(Blend, OutcomeRecord) {
  Upper a("A"), b("B");
  const auto o = blend_attack(evadebench::testing::make_sample("s", "One. Two."), {&a, &b});
  EXPECT_EQ(o.attack_id, "blend(A,B)");
  EXPECT_EQ(o.attacked_text, "A:ONE. B:TWO.");
}
