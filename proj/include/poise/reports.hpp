// Copyright 2026 The Poise Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Report surfaces: frontier / retention / trade-off tables in CSV or JSON,
// and DOT export of the lineage. Overall-scale numbers print at 1 decimal,
// ratios at 3.

#ifndef POISE_REPORTS_HPP_
#define POISE_REPORTS_HPP_

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/archive.hpp"
#include "poise/fixtures.hpp"

namespace poise {

enum class ReportFormat { csv, json };

inline ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw PoiseError("unknown report format: " + s);
}

// ---------------------------------------------------------------------------
// Frontier
// ---------------------------------------------------------------------------

inline std::string frontier_report(const LineageTree& tree, ReportFormat format) {
  const std::vector<DepthFrontierRow> rows = depth_frontier(tree);
  if (format == ReportFormat::csv) {
    std::string out = "depth,cumulative_best,mean_top3\n";
    for (const auto& r : rows) {
      out += std::to_string(r.depth) + "," + fmt_fixed(r.cumulative_best, 1) + "," +
             fmt_fixed(r.mean_top3, 1) + "\n";
    }
    return out;
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"depth", r.depth},
                 {"cumulative_best", r.cumulative_best},
                 {"mean_top3", r.mean_top3}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Retention
// ---------------------------------------------------------------------------

inline std::string retention_report_text(const ParentRetentionReport& report,
                                         ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = "parent,parent_overall,best_descendant,descendant_overall,gain\n";
    for (const auto& r : report.rows) {
      out += r.parent_id + "," + fmt_fixed(r.parent_overall, 1) + ",";
      if (r.best_descendant_id) {
        const std::string sign = r.gain >= 0 ? "+" : "";
        out += *r.best_descendant_id + "," + fmt_fixed(r.best_descendant_overall, 1) +
               "," + sign + fmt_fixed(r.gain, 1);
      } else {
        out += "no descendants,,";
      }
      out += "\n";
    }
    return out;
  }
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"parent", r.parent_id}, {"parent_overall", r.parent_overall}};
    if (r.best_descendant_id) {
      row["best_descendant"] = *r.best_descendant_id;
      row["descendant_overall"] = r.best_descendant_overall;
      row["gain"] = r.gain;
    } else {
      row["best_descendant"] = nullptr;
    }
    j["rows"].push_back(row);
  }
  j["rounds"] = nlohmann::json::array();
  for (const auto& rd : report.rounds) {
    nlohmann::json row{{"parents", rd.parents},
                       {"top_scoring_parent", rd.top_scoring_parent},
                       {"reversal", rd.reversal}};
    if (rd.strongest_descendant_parent) {
      row["strongest_descendant_parent"] = *rd.strongest_descendant_parent;
    }
    j["rounds"].push_back(row);
  }
  j["reversal_count"] = report.reversal_count;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Accuracy-length trade-off
// ---------------------------------------------------------------------------

struct TradeoffRow {
  std::string name;
  double overall = 0.0;
  double mean_length = 0.0;
  double ratio = 0.0;
  bool on_frontier = false;
};

inline std::vector<TradeoffRow> tradeoff_rows(const LineageTree& tree,
                                              const std::string& baseline_id) {
  const ArchiveEntry& baseline = tree.get(baseline_id);
  std::vector<MetricPoint> points;
  std::vector<TradeoffRow> rows;
  for (const auto& e : tree.entries()) {
    if (e.metrics.mean_length <= 0.0) continue;
    TradeoffRow r;
    r.name = e.node_id;
    r.overall = e.metrics.overall;
    r.mean_length = e.metrics.mean_length;
    r.ratio = length_ratio(e, baseline);
    rows.push_back(r);
    points.push_back(metric_point(e, baseline.metrics.mean_length));
  }
  const std::vector<std::string> front = pareto_frontier(
      points, {{"overall", Sense::maximize}, {"length_ratio", Sense::minimize}});
  const std::set<std::string> front_set(front.begin(), front.end());
  for (auto& r : rows) r.on_frontier = front_set.count(r.name) > 0;
  return rows;
}

inline std::string tradeoff_report(const LineageTree& tree, const std::string& baseline_id,
                                   ReportFormat format) {
  const std::vector<TradeoffRow> rows = tradeoff_rows(tree, baseline_id);
  if (format == ReportFormat::csv) {
    std::string out = "name,overall,mean_length,length_ratio,pareto\n";
    for (const auto& r : rows) {
      out += r.name + "," + fmt_fixed(r.overall, 1) + "," + fmt_fixed(r.mean_length, 1) +
             "," + fmt_fixed(r.ratio, 3) + "," + (r.on_frontier ? "yes" : "no") + "\n";
    }
    return out;
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"name", r.name},
                 {"overall", r.overall},
                 {"mean_length", r.mean_length},
                 {"length_ratio", r.ratio},
                 {"pareto", r.on_frontier}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// DOT export: nodes labeled "name (overall)", fill saturation encodes the
// weighted Overall (lighter is lower).
// ---------------------------------------------------------------------------

inline std::string dot_export(const LineageTree& tree) {
  std::string out = "digraph lineage {\n";
  out += "  rankdir=TB;\n";
  out += "  node [shape=box, style=filled, fontname=\"Helvetica\"];\n";
  if (!tree.empty()) {
    double lo = tree.entries().front().metrics.overall;
    double hi = lo;
    for (const auto& e : tree.entries()) {
      lo = std::min(lo, e.metrics.overall);
      hi = std::max(hi, e.metrics.overall);
    }
    for (const auto& e : tree.entries()) {
      const double norm = hi > lo ? (e.metrics.overall - lo) / (hi - lo) : 0.5;
      out += "  \"" + e.node_id + "\" [label=\"" + e.node_id + " (" +
             fmt_fixed(e.metrics.overall, 1) + ")\", fillcolor=\"0.580 " +
             fmt_fixed(0.12 + 0.68 * norm, 3) + " 1.000\"];\n";
    }
    for (const auto& e : tree.entries()) {
      if (e.parent_id) {
        out += "  \"" + *e.parent_id + "\" -> \"" + e.node_id + "\";\n";
      }
    }
  }
  out += "}\n";
  return out;
}

}  // namespace poise

#endif  // POISE_REPORTS_HPP_
