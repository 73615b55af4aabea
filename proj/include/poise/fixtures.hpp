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
// Reference-results fixtures: machine-readable score tables with optional
// lineage edges, loadable into archive-compatible trees for the analytics
// and report layers.

#ifndef POISE_FIXTURES_HPP_
#define POISE_FIXTURES_HPP_

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/archive.hpp"

namespace poise {

struct FixtureRow {
  std::string name;
  std::array<double, kNumBuckets> scores{};
  double overall = 0.0;
  std::optional<double> mean_length;
  std::optional<double> length_ratio;  // stored ratio, cross-checked on load
  std::optional<std::string> parent;
};

struct FixtureStore {
  std::vector<FixtureRow> rows;
  std::vector<std::vector<std::string>> rounds;
  std::vector<std::string> retention_parents;
  std::optional<std::string> baseline;

  const FixtureRow& row(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.name == name) return r;
    }
    throw PoiseError("fixture: unknown row: " + name);
  }

  bool has_row(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.name == name) return true;
    }
    return false;
  }
};

namespace detail {

// Fixture entries carry the stored Overall column verbatim (reports must
// reproduce it exactly); the loader has already checked it against the
// weighting within the rounding tolerance.
inline ArchiveEntry fixture_entry(const FixtureRow& row) {
  ArchiveEntry e;
  e.node_id = row.name;
  e.parent_id = row.parent;
  e.genome = default_grpo_genome();
  e.genome.descriptor = row.name;
  e.metrics.scores = row.scores;
  e.metrics.mean_length = row.mean_length.value_or(0.0);
  e.metrics.overall = row.overall;
  return e;
}

}  // namespace detail

// Loads and validates a fixture file. Every row's stored Overall must agree
// with the declared weighting within +/-0.05 (a float-noise guard of 1e-9 on
// top); stored length ratios must agree with mean_length / baseline
// within +/-0.001. Violations raise an error naming the row.
inline FixtureStore load_fixture_store(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "fixtures: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PoiseError("fixtures: " + path + ": " + e.what());
  }

  FixtureStore store;
  if (j.contains("baseline")) store.baseline = j.at("baseline").get<std::string>();
  const bool partial_scores = j.contains("baseline");  // compression-style table

  for (const auto& rj : j.at("rows")) {
    FixtureRow row;
    row.name = rj.at("name").get<std::string>();
    if (rj.at("scores").is_array()) {
      const auto scores = rj.at("scores").get<std::vector<double>>();
      require(scores.size() == kNumBuckets,
              "fixtures: row " + row.name + ": expected 6 scores");
      std::copy(scores.begin(), scores.end(), row.scores.begin());
    } else {
      for (const auto& [key, val] : rj.at("scores").items()) {
        row.scores[static_cast<int>(bucket_from_string(key))] = val.get<double>();
      }
    }
    row.overall = rj.at("overall").get<double>();
    if (rj.contains("mean_length")) row.mean_length = rj.at("mean_length").get<double>();
    if (rj.contains("length_ratio")) row.length_ratio = rj.at("length_ratio").get<double>();
    if (rj.contains("parent")) row.parent = rj.at("parent").get<std::string>();

    if (!partial_scores) {
      const double recomputed = weighted_overall(row.scores);
      if (std::abs(recomputed - row.overall) > 0.05 + 1e-9) {
        throw PoiseError("fixtures: row " + row.name + ": stored overall " +
                         fmt_fixed(row.overall, 1) + " deviates from recomputed " +
                         fmt_fixed(recomputed, 3) + " by more than 0.05");
      }
    }
    store.rows.push_back(std::move(row));
  }

  if (j.contains("rounds")) {
    store.rounds = j.at("rounds").get<std::vector<std::vector<std::string>>>();
  }
  if (j.contains("retention_parents")) {
    store.retention_parents = j.at("retention_parents").get<std::vector<std::string>>();
  }

  std::set<std::string> names;
  for (const auto& r : store.rows) {
    require(names.insert(r.name).second, "fixtures: duplicate row: " + r.name);
  }
  for (const auto& r : store.rows) {
    if (r.parent) require(names.count(*r.parent), "fixtures: row " + r.name +
                                                      ": unknown parent " + *r.parent);
  }
  for (const auto& round : store.rounds) {
    for (const auto& id : round) {
      require(names.count(id), "fixtures: round references unknown row " + id);
    }
  }
  for (const auto& id : store.retention_parents) {
    require(names.count(id), "fixtures: retention parent unknown: " + id);
  }

  if (store.baseline) {
    const FixtureRow& base = store.row(*store.baseline);
    require(base.mean_length.has_value() && *base.mean_length > 0.0,
            "fixtures: baseline row needs a positive mean_length");
    for (const auto& r : store.rows) {
      if (r.length_ratio && r.mean_length) {
        const double recomputed = *r.mean_length / *base.mean_length;
        if (std::abs(recomputed - *r.length_ratio) > 0.001) {
          throw PoiseError("fixtures: row " + r.name + ": stored length_ratio " +
                           fmt_fixed(*r.length_ratio, 3) + " deviates from recomputed " +
                           fmt_fixed(recomputed, 4));
        }
      }
    }
  }
  return store;
}

// The whole store as a forest (stated edges only; rows without a stated
// parent become component roots).
inline LineageTree fixture_forest(const FixtureStore& store) {
  LineageTree tree(true);
  // Parents must be appended before children; stated chains are shallow, so
  // a few passes settle the order.
  std::vector<const FixtureRow*> pending;
  for (const auto& r : store.rows) pending.push_back(&r);
  while (!pending.empty()) {
    std::vector<const FixtureRow*> next;
    for (const FixtureRow* r : pending) {
      if (!r->parent || tree.contains(*r->parent)) {
        tree.append(detail::fixture_entry(*r));
      } else {
        next.push_back(r);
      }
    }
    require(next.size() < pending.size(), "fixture_forest: unresolvable parent order");
    pending = std::move(next);
  }
  return tree;
}

// The single-root component containing the named row (for depth analytics
// over the stated chains).
inline LineageTree fixture_component(const FixtureStore& store, const std::string& root) {
  return fixture_forest(store).component(root);
}

}  // namespace poise

#endif  // POISE_FIXTURES_HPP_
