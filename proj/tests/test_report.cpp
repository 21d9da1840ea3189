#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/report.hpp"

using namespace evadebench;
using namespace evadebench::report;

TEST(MinMax, DirectionAndDegenerate) {
  const std::vector<double> v = {2, 4, 3};
  bool deg = true;
  EXPECT_EQ(min_max(v, true, &deg), (std::vector<double>{0.0, 1.0, 0.5}));
  EXPECT_FALSE(deg);
  EXPECT_EQ(min_max(v, false), (std::vector<double>{1.0, 0.0, 0.5}));
  const std::vector<double> flat = {7, 7};
  EXPECT_EQ(min_max(flat, true, &deg), (std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(deg);
}

TEST(Summary, HandComputedThreeAttacks) {
  const std::vector<RawAxes> raw = {
      {"a", 0.30, 0.9, 0.8, 10.0, 2.0, 1.0},
      {"b", 0.10, 0.7, 0.6, 30.0, 6.0, 5.0},
      {"c", 0.20, 0.8, 0.4, 20.0, 4.0, 3.0},
  };
  const auto s = normalize_axes(raw);
  ASSERT_EQ(s.rows.size(), 3u);
  // cs: a1 b0 c.5; rouge: a1 b.5 c0; ppl (inverted): a1 b0 c.5; fre (inverted): a1 b0 c.5
  EXPECT_DOUBLE_EQ(s.rows[0].quality_composite, 1.0);
  EXPECT_DOUBLE_EQ(s.rows[1].quality_composite, 0.125);
  EXPECT_DOUBLE_EQ(s.rows[2].quality_composite, 0.375);
  EXPECT_DOUBLE_EQ(s.rows[0].quality, 1.0);
  EXPECT_DOUBLE_EQ(s.rows[1].quality, 0.0);
  EXPECT_DOUBLE_EQ(s.rows[2].quality, (0.375 - 0.125) / 0.875);
  EXPECT_DOUBLE_EQ(s.rows[0].effectiveness, 1.0);
  EXPECT_DOUBLE_EQ(s.rows[1].effectiveness, 0.0);
  EXPECT_DOUBLE_EQ(s.rows[2].effectiveness, 0.5);
  EXPECT_DOUBLE_EQ(s.rows[0].cost, 1.0);
  EXPECT_DOUBLE_EQ(s.rows[1].cost, 0.0);
  EXPECT_DOUBLE_EQ(s.rows[2].cost, 0.5);
}

TEST(Summary, DominatingAttackGetsOnesAndTiesGetHalf) {
  std::vector<RawAxes> raw = {{"best", 0.5, 0.9, 0.9, 1.0, 1.0, 1.0}, {"worst", 0.1, 0.1, 0.1, 9.0, 9.0, 9.0}};
  const auto s = normalize_axes(raw);
  EXPECT_EQ(s.rows[0].effectiveness, 1.0);
  EXPECT_EQ(s.rows[0].quality, 1.0);
  EXPECT_EQ(s.rows[0].cost, 1.0);
  raw[1].wall_time = raw[0].wall_time;
  const auto tied = normalize_axes(raw);
  EXPECT_EQ(tied.rows[0].cost, 0.5);
  EXPECT_EQ(tied.rows[1].cost, 0.5);
  EXPECT_EQ(tied.rows[0].degenerate, (std::vector<std::string>{"cost"}));
  EXPECT_THROW(normalize_axes(std::span<const RawAxes>(raw.data(), 1)), InputError);
}

TEST(Summary, WeightsValidation) {
  EXPECT_THROW(weights_from_json({{"cs", -1}}), InputError);
  EXPECT_THROW(weights_from_json({{"cs", 0}, {"rouge_l", 0}, {"ppl", 0}, {"fre", 0}}), InputError);
  EXPECT_DOUBLE_EQ(weights_from_json({{"cs", 2}}).cs, 2.0);
}

TEST(Summary, FromStoredRecords) {
  using evaluation::EvalReport;
  std::vector<EvalReport> cells;
  auto cell = [&](std::string det, std::string atk, double auc) {
    EvalReport r;
    r.key = {"d", "all", std::move(det), std::move(atk), "", ""};
    r.auc = auc;
    cells.push_back(r);
  };
  cell("x", "clean", 0.9);
  cell("y", "clean", 0.8);
  cell("x", "raft", 0.5);
  cell("y", "raft", 0.6);
  cell("x", "dipper", 0.8);
  cell("x", "hmgc", 0.1);
  std::vector<quality::QualityAggregate> q(2);
  q[0].attack_id = "raft";
  q[1].attack_id = "dipper";
  std::vector<OverheadRecord> o(2);
  o[0].attack_id = "raft";
  o[0].wall_time = 2.0;
  o[1].attack_id = "dipper";
  o[1].wall_time = 1.0;
  const auto s = normalize_summary(cells, q, o);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.rows[0].raw.attack_id, "dipper");
  EXPECT_NEAR(s.rows[0].raw.effectiveness, 0.1, 1e-12);
  EXPECT_NEAR(s.rows[1].raw.effectiveness, 0.3, 1e-12);
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("hmgc"), std::string::npos);
}
