#include "evadebench/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"

namespace evadebench::report {

using nlohmann::json;

json to_json(const SummaryWeights& w) {
  return {{"cs", w.cs}, {"rouge_l", w.rouge_l}, {"ppl", w.ppl}, {"fre", w.fre}};
}

SummaryWeights weights_from_json(const json& j) {
  SummaryWeights w;
  w.cs = j.value("cs", w.cs);
  w.rouge_l = j.value("rouge_l", w.rouge_l);
  w.ppl = j.value("ppl", w.ppl);
  w.fre = j.value("fre", w.fre);
  for (double x : {w.cs, w.rouge_l, w.ppl, w.fre}) {
    if (!(x >= 0)) throw InputError("summary weights must be non-negative");
  }
  if (w.cs + w.rouge_l + w.ppl + w.fre <= 0) throw InputError("summary weights must not all be zero");
  return w;
}

std::vector<double> min_max(std::span<const double> values, bool higher_is_better, bool* degenerate) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (degenerate) *degenerate = range == 0.0;
  std::vector<double> out;
  for (double v : values) {
    if (range == 0.0) {
      out.push_back(0.5);
    } else {
      const double x = (v - *lo) / range;
      out.push_back(higher_is_better ? x : 1.0 - x);
    }
  }
  return out;
}

Summary normalize_axes(std::span<const RawAxes> raw, const SummaryWeights& weights) {
  if (raw.size() < 2) throw InputError("the summary needs at least two attacks to normalise");
  std::vector<double> eff, cs, rl, ppl, fre, cost;
  for (const auto& r : raw) {
    eff.push_back(r.effectiveness);
    cs.push_back(r.cs);
    rl.push_back(r.rouge_l);
    ppl.push_back(r.abs_ppl_delta);
    fre.push_back(r.abs_fre_delta);
    cost.push_back(r.wall_time);
  }
  bool d_eff, d_cost, d_q, d_cs, d_rl, d_ppl, d_fre;
  const auto n_eff = min_max(eff, true, &d_eff);
  const auto n_cost = min_max(cost, false, &d_cost);
  const auto n_cs = min_max(cs, true, &d_cs);
  const auto n_rl = min_max(rl, true, &d_rl);
  const auto n_ppl = min_max(ppl, false, &d_ppl);
  const auto n_fre = min_max(fre, false, &d_fre);
  const double wsum = weights.cs + weights.rouge_l + weights.ppl + weights.fre;
  std::vector<double> composite;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    composite.push_back((weights.cs * n_cs[i] + weights.rouge_l * n_rl[i] + weights.ppl * n_ppl[i] +
                         weights.fre * n_fre[i]) /
                        wsum);
  }
  const auto n_q = min_max(composite, true, &d_q);
  Summary s;
  s.weights = weights;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    SummaryRow row;
    row.raw = raw[i];
    row.quality_composite = composite[i];
    row.effectiveness = n_eff[i];
    row.quality = n_q[i];
    row.cost = n_cost[i];
    if (d_eff) row.degenerate.push_back("effectiveness");
    if (d_q) row.degenerate.push_back("quality");
    if (d_cost) row.degenerate.push_back("cost");
    s.rows.push_back(std::move(row));
  }
  return s;
}

Summary normalize_summary(std::span<const evaluation::EvalReport> cells,
                          std::span<const quality::QualityAggregate> quality,
                          std::span<const OverheadRecord> overhead, const SummaryWeights& weights) {
  using Cell = std::pair<std::string, std::string>;  // dataset, detector
  std::map<Cell, double> clean;
  std::map<std::string, std::map<Cell, double>> attacked;  // attack -> cell -> AUC
  for (const auto& c : cells) {
    if (c.failed || c.key.generator != "all" || !c.key.train_attack_id.empty() || !c.key.class_name.empty()) continue;
    if (c.key.attack_id == "clean") {
      clean[{c.key.dataset, c.key.detector_id}] = c.auc;
    } else {
      attacked[c.key.attack_id][{c.key.dataset, c.key.detector_id}] = c.auc;
    }
  }
  std::map<std::string, const quality::QualityAggregate*> q;
  for (const auto& a : quality) q[a.attack_id] = &a;
  std::map<std::string, std::pair<double, std::size_t>> t;
  for (const auto& r : overhead) {
    auto& acc = t[r.attack_id];
    acc.first += r.wall_time;
    ++acc.second;
  }
  std::set<std::string> attacks;
  for (const auto& [a, _] : attacked) attacks.insert(a);
  for (const auto& [a, _] : q) attacks.insert(a);
  for (const auto& [a, _] : t) attacks.insert(a);

  std::vector<RawAxes> raw;
  std::vector<std::string> warnings;
  for (const auto& a : attacks) {
    RawAxes r;
    r.attack_id = a;
    double sum = 0.0;
    std::size_t n = 0;
    if (auto it = attacked.find(a); it != attacked.end()) {
      for (const auto& [cell, auc] : it->second) {
        if (auto c = clean.find(cell); c != clean.end()) {
          sum += c->second - auc;
          ++n;
        }
      }
    }
    std::vector<std::string> missing;
    if (n == 0) missing.push_back("effectiveness");
    if (!q.count(a)) missing.push_back("quality");
    if (!t.count(a)) missing.push_back("cost");
    if (!missing.empty()) {
      std::string m;
      for (const auto& x : missing) m += (m.empty() ? "" : ", ") + x;
      warnings.push_back("attack '" + a + "' excluded from the summary: missing " + m);
      continue;
    }
    r.effectiveness = sum / static_cast<double>(n);
    r.cs = q[a]->cs;
    r.rouge_l = q[a]->rouge_l;
    r.abs_ppl_delta = q[a]->abs_ppl_delta;
    r.abs_fre_delta = q[a]->abs_fre_delta;
    r.wall_time = t[a].first / static_cast<double>(t[a].second);
    raw.push_back(r);
  }
  auto s = normalize_axes(raw, weights);
  s.warnings = std::move(warnings);
  return s;
}

json to_json(const Summary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"attack_id", r.raw.attack_id},
                    {"raw",
                     {{"effectiveness", r.raw.effectiveness},
                      {"cs", r.raw.cs},
                      {"rouge_l", r.raw.rouge_l},
                      {"abs_ppl_delta", r.raw.abs_ppl_delta},
                      {"abs_fre_delta", r.raw.abs_fre_delta},
                      {"quality_composite", r.quality_composite},
                      {"wall_time", r.raw.wall_time}}},
                    {"normalized", {{"effectiveness", r.effectiveness}, {"quality", r.quality}, {"cost", r.cost}}},
                    {"degenerate", r.degenerate}});
  }
  return {{"rows", rows}, {"weights", to_json(s.weights)}, {"warnings", s.warnings}};
}

}  // namespace evadebench::report
