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
// Genealogically linked archive: entries with parent links, lineage queries,
// depth/retention/Pareto analytics, and JSONL persistence.

#ifndef POISE_ARCHIVE_HPP_
#define POISE_ARCHIVE_HPP_

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/env.hpp"
#include "poise/genome.hpp"
#include "poise/reflection.hpp"

namespace poise {

struct ArchiveEntry {
  std::string node_id;
  std::optional<std::string> parent_id;
  Genome genome;
  TrajectorySummary trajectory;
  MetricVector metrics;
  Reflection reflection;
  int created_at = 0;
  int depth = 0;

  bool operator==(const ArchiveEntry&) const = default;
};

inline void to_json(nlohmann::json& j, const ArchiveEntry& e) {
  j = nlohmann::json{{"node_id", e.node_id},
                     {"genome", e.genome},
                     {"trajectory", e.trajectory},
                     {"metrics", e.metrics},
                     {"reflection", e.reflection},
                     {"created_at", e.created_at},
                     {"depth", e.depth}};
  if (e.parent_id) j["parent_id"] = *e.parent_id;
}

inline void from_json(const nlohmann::json& j, ArchiveEntry& e) {
  e = ArchiveEntry{};
  e.node_id = j.at("node_id").get<std::string>();
  if (j.contains("parent_id")) e.parent_id = j.at("parent_id").get<std::string>();
  e.genome = j.at("genome").get<Genome>();
  e.trajectory = j.at("trajectory").get<TrajectorySummary>();
  e.metrics = j.at("metrics").get<MetricVector>();
  e.reflection = j.at("reflection").get<Reflection>();
  e.created_at = j.at("created_at").get<int>();
  e.depth = j.at("depth").get<int>();
}

// Insertion-ordered forest. Run archives enforce a single root (the
// baseline); fixture stores may hold several components.
class LineageTree {
 public:
  explicit LineageTree(bool allow_multiple_roots = false)
      : allow_multiple_roots_(allow_multiple_roots) {}

  // Depth is derived from the parent link; append is atomic (the entry is
  // either fully indexed or the tree is unchanged).
  void append(ArchiveEntry entry) {
    require(!entry.node_id.empty(), "append_entry: empty node id");
    require(index_.find(entry.node_id) == index_.end(),
            "append_entry: duplicate node id: " + entry.node_id);
    if (entry.parent_id) {
      auto it = index_.find(*entry.parent_id);
      require(it != index_.end(),
              "append_entry: unknown parent: " + *entry.parent_id);
      entry.depth = entries_[it->second].depth + 1;
    } else {
      require(allow_multiple_roots_ || root_count_ == 0,
              "append_entry: archive already has a root");
      entry.depth = 0;
      ++root_count_;
    }
    for (const auto& e : entries_) {
      require(e.genome.descriptor != entry.genome.descriptor,
              "append_entry: duplicate descriptor: " + entry.genome.descriptor);
    }
    index_[entry.node_id] = entries_.size();
    if (entry.parent_id) children_[*entry.parent_id].push_back(entry.node_id);
    children_.emplace(entry.node_id, std::vector<std::string>{});
    entries_.push_back(std::move(entry));
  }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const ArchiveEntry& get(const std::string& id) const {
    auto it = index_.find(id);
    require(it != index_.end(), "lineage: unknown node: " + id);
    return entries_[it->second];
  }

  const std::vector<ArchiveEntry>& entries() const { return entries_; }

  const std::vector<std::string>& children(const std::string& id) const {
    auto it = children_.find(id);
    require(it != children_.end(), "lineage: unknown node: " + id);
    return it->second;
  }

  std::vector<std::string> roots() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (!e.parent_id) out.push_back(e.node_id);
    }
    return out;
  }

  // All strict descendants of `id`, preorder.
  std::vector<std::string> descendants(const std::string& id) const {
    std::vector<std::string> out;
    std::vector<std::string> stack(children(id).rbegin(), children(id).rend());
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      out.push_back(cur);
      const auto& kids = children(cur);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    return out;
  }

  // Root-to-node path, inclusive.
  std::vector<std::string> lineage_path(const std::string& id) const {
    std::vector<std::string> rev;
    std::string cur = id;
    while (true) {
      rev.push_back(cur);
      const auto& e = get(cur);
      if (!e.parent_id) break;
      cur = *e.parent_id;
    }
    return std::vector<std::string>(rev.rbegin(), rev.rend());
  }

  std::size_t subtree_size(const std::string& id) const {
    return descendants(id).size() + 1;
  }

  // The component reachable from `root_id`, re-rooted as a single-root tree.
  LineageTree component(const std::string& root_id) const {
    LineageTree out(false);
    ArchiveEntry root = get(root_id);
    root.parent_id.reset();
    out.append(root);
    for (const auto& id : descendants(root_id)) out.append(get(id));
    return out;
  }

  bool operator==(const LineageTree& other) const {
    return entries_ == other.entries_;
  }

 private:
  bool allow_multiple_roots_;
  int root_count_ = 0;
  std::vector<ArchiveEntry> entries_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::string>> children_;
};

inline void append_entry(LineageTree& archive, ArchiveEntry entry) {
  archive.append(std::move(entry));
}

// ---------------------------------------------------------------------------
// Depth-frontier analytics
// ---------------------------------------------------------------------------

struct DepthFrontierRow {
  int depth = 0;
  double cumulative_best = 0.0;
  double mean_top3 = 0.0;
};

// Per depth: cumulative best Overall so far and the mean of the best
// min(3, n) Overall values at that depth.
inline std::vector<DepthFrontierRow> depth_frontier(const LineageTree& tree) {
  require(!tree.empty(), "depth_frontier: empty tree");
  std::map<int, std::vector<double>> by_depth;
  for (const auto& e : tree.entries()) {
    by_depth[e.depth].push_back(e.metrics.overall);
  }
  std::vector<DepthFrontierRow> out;
  double cumulative = -std::numeric_limits<double>::infinity();
  for (auto& [depth, overalls] : by_depth) {
    std::sort(overalls.begin(), overalls.end(), std::greater<double>());
    cumulative = std::max(cumulative, overalls.front());
    const std::size_t k = std::min<std::size_t>(3, overalls.size());
    double top = 0.0;
    for (std::size_t i = 0; i < k; ++i) top += overalls[i];
    out.push_back({depth, cumulative, top / static_cast<double>(k)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parent-retention analytics
// ---------------------------------------------------------------------------

struct ParentRetentionRow {
  std::string parent_id;
  double parent_overall = 0.0;
  std::optional<std::string> best_descendant_id;
  double best_descendant_overall = 0.0;
  double gain = 0.0;
};

struct RoundOutcome {
  std::vector<std::string> parents;
  std::string top_scoring_parent;
  std::optional<std::string> strongest_descendant_parent;
  bool reversal = false;
};

struct ParentRetentionReport {
  std::vector<ParentRetentionRow> rows;
  std::vector<RoundOutcome> rounds;
  int reversal_count = 0;
};

namespace detail {

inline ParentRetentionRow retention_row(const LineageTree& tree,
                                        const std::string& parent_id) {
  ParentRetentionRow row;
  row.parent_id = parent_id;
  row.parent_overall = tree.get(parent_id).metrics.overall;
  for (const auto& d : tree.descendants(parent_id)) {
    const double ov = tree.get(d).metrics.overall;
    if (!row.best_descendant_id || ov > row.best_descendant_overall) {
      row.best_descendant_id = d;
      row.best_descendant_overall = ov;
    }
  }
  if (row.best_descendant_id) row.gain = row.best_descendant_overall - row.parent_overall;
  return row;
}

}  // namespace detail

// Per parent: the strongest descendant and its gain. Per round: whether the
// best-scoring selected parent produced the strongest descendant (a
// "reversal" when it did not). `extra_parents` adds per-parent rows for
// parents not covered by the round list.
inline ParentRetentionReport parent_retention_report(
    const LineageTree& tree, const std::vector<std::vector<std::string>>& rounds,
    const std::vector<std::string>& extra_parents = {}) {
  ParentRetentionReport report;
  std::set<std::string> seen;
  auto add_row = [&](const std::string& id) {
    if (seen.insert(id).second) {
      report.rows.push_back(detail::retention_row(tree, id));
    }
  };

  for (const auto& round : rounds) {
    require(!round.empty(), "parent_retention_report: empty round");
    RoundOutcome outcome;
    outcome.parents = round;
    double best_parent_score = -std::numeric_limits<double>::infinity();
    double best_desc = -std::numeric_limits<double>::infinity();
    for (const auto& pid : round) {
      add_row(pid);
      const ParentRetentionRow row = detail::retention_row(tree, pid);
      if (row.parent_overall > best_parent_score) {
        best_parent_score = row.parent_overall;
        outcome.top_scoring_parent = pid;
      }
      if (row.best_descendant_id && row.best_descendant_overall > best_desc) {
        best_desc = row.best_descendant_overall;
        outcome.strongest_descendant_parent = pid;
      }
    }
    outcome.reversal = outcome.strongest_descendant_parent &&
                       *outcome.strongest_descendant_parent != outcome.top_scoring_parent;
    report.reversal_count += outcome.reversal ? 1 : 0;
    report.rounds.push_back(std::move(outcome));
  }
  for (const auto& pid : extra_parents) add_row(pid);
  return report;
}

// ---------------------------------------------------------------------------
// Pareto analytics
// ---------------------------------------------------------------------------

enum class Sense { maximize, minimize };

struct Objective {
  std::string key;
  Sense sense = Sense::maximize;
};

struct MetricPoint {
  std::string id;
  std::map<std::string, double> metrics;

  double at(const std::string& key) const {
    auto it = metrics.find(key);
    require(it != metrics.end(), "pareto: unknown metric key: " + key);
    return it->second;
  }
};

inline MetricPoint metric_point(const ArchiveEntry& e,
                                std::optional<double> baseline_mean_length = std::nullopt) {
  MetricPoint p;
  p.id = e.node_id;
  for (int i = 0; i < kNumBuckets; ++i) p.metrics[bucket_names()[i]] = e.metrics.scores[i];
  p.metrics["overall"] = e.metrics.overall;
  p.metrics["mean_length"] = e.metrics.mean_length;
  if (baseline_mean_length) {
    require(*baseline_mean_length > 0.0, "metric_point: zero baseline length");
    p.metrics["length_ratio"] = e.metrics.mean_length / *baseline_mean_length;
  }
  return p;
}

namespace detail {

// a dominates b: at least as good on every objective, strictly better on one.
inline bool dominates(const MetricPoint& a, const MetricPoint& b,
                      const std::vector<Objective>& objectives) {
  bool strict = false;
  for (const auto& obj : objectives) {
    const double va = a.at(obj.key);
    const double vb = b.at(obj.key);
    const double better = obj.sense == Sense::maximize ? va - vb : vb - va;
    if (better < 0.0) return false;
    if (better > 0.0) strict = true;
  }
  return strict;
}

}  // namespace detail

// The non-dominated subset under weak dominance: ties are kept, only
// strictly dominated points are excluded.
inline std::vector<std::string> pareto_frontier(const std::vector<MetricPoint>& points,
                                                const std::vector<Objective>& objectives) {
  require(!objectives.empty(), "pareto_frontier: no objectives");
  for (const auto& p : points) {
    for (const auto& obj : objectives) p.at(obj.key);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (i != j && detail::dominates(points[j], points[i], objectives)) dominated = true;
    }
    if (!dominated) out.push_back(points[i].id);
  }
  return out;
}

// Successive non-dominated fronts; front 0 is the Pareto frontier.
inline std::vector<int> nondominated_front_ranks(const std::vector<MetricPoint>& points,
                                                 const std::vector<Objective>& objectives) {
  std::vector<int> rank(points.size(), -1);
  std::size_t assigned = 0;
  int front = 0;
  while (assigned < points.size()) {
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (rank[i] != -1) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
        if (rank[j] == -1 && i != j &&
            detail::dominates(points[j], points[i], objectives)) {
          dominated = true;
        }
      }
      if (!dominated) current.push_back(i);
    }
    require(!current.empty(), "nondominated_front_ranks: no progress");
    for (std::size_t i : current) rank[i] = front;
    assigned += current.size();
    ++front;
  }
  return rank;
}

inline double length_ratio(const ArchiveEntry& entry, const ArchiveEntry& baseline) {
  require(baseline.metrics.mean_length > 0.0, "length_ratio: zero baseline length");
  return entry.metrics.mean_length / baseline.metrics.mean_length;
}

// ---------------------------------------------------------------------------
// Persistence: append-only JSONL, one entry per line.
// ---------------------------------------------------------------------------

inline std::string archive_to_jsonl(const LineageTree& tree) {
  std::string out;
  for (const auto& e : tree.entries()) {
    out += nlohmann::json(e).dump();
    out += '\n';
  }
  return out;
}

inline void save_archive(const LineageTree& tree, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "save_archive: cannot open " + path);
  f << archive_to_jsonl(tree);
  require(f.good(), "save_archive: write failed on " + path);
}

inline LineageTree archive_from_jsonl(const std::string& text,
                                      bool allow_multiple_roots = false) {
  LineageTree tree(allow_multiple_roots);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    ++line_no;
    if (end == std::string::npos) {
      throw PoiseError("load_archive: line " + std::to_string(line_no) +
                       ": truncated final line");
    }
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      tree.append(nlohmann::json::parse(line).get<ArchiveEntry>());
    } catch (const nlohmann::json::exception& e) {
      throw PoiseError("load_archive: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tree;
}

inline LineageTree load_archive(const std::string& path,
                                bool allow_multiple_roots = false) {
  std::ifstream f(path);
  require(f.good(), "load_archive: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return archive_from_jsonl(text, allow_multiple_roots);
}

}  // namespace poise

#endif  // POISE_ARCHIVE_HPP_
