#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evadebench/evaluation.hpp"
#include "evadebench/quality.hpp"
#include "evadebench/records.hpp"

// Three-axis attack summary: effectiveness, quality, cost. Each axis is
// min-max normalised across attacks so that 1 is best.
namespace evadebench::report {

// Weights of the quality composite. Components are min-max normalised
// across attacks first (|dPPL| and |dFRE| inverted), then blended.
struct SummaryWeights {
  double cs = 0.25;
  double rouge_l = 0.25;
  double ppl = 0.25;
  double fre = 0.25;
};

nlohmann::json to_json(const SummaryWeights& w);
SummaryWeights weights_from_json(const nlohmann::json& j);

struct RawAxes {
  std::string attack_id;
  double effectiveness = 0.0;  // clean AUC minus attacked AUC, mean over detectors
  double cs = 0.0;
  double rouge_l = 0.0;
  double abs_ppl_delta = 0.0;
  double abs_fre_delta = 0.0;
  double wall_time = 0.0;  // mean seconds per sample
};

struct SummaryRow {
  RawAxes raw;
  double quality_composite = 0.0;
  double effectiveness = 0.0;  // normalised axes
  double quality = 0.0;
  double cost = 0.0;
  std::vector<std::string> degenerate;  // axes whose range was zero (set to 0.5)
};

struct Summary {
  std::vector<SummaryRow> rows;
  SummaryWeights weights;
  std::vector<std::string> warnings;
};

// Min-max over attacks; a zero range maps every value to 0.5.
std::vector<double> min_max(std::span<const double> values, bool higher_is_better, bool* degenerate = nullptr);

// Needs at least two attacks.
Summary normalize_axes(std::span<const RawAxes> raw, const SummaryWeights& weights = {});

// Builds the raw axes from stored results: eval cells (generator "all"),
// per-attack quality aggregates and overhead records. Attacks missing any
// axis are dropped with a warning.
Summary normalize_summary(std::span<const evaluation::EvalReport> cells,
                          std::span<const quality::QualityAggregate> quality,
                          std::span<const OverheadRecord> overhead, const SummaryWeights& weights = {});

nlohmann::json to_json(const Summary& s);

}  // namespace evadebench::report
