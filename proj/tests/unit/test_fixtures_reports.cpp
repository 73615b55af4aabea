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

#include <cstdio>
#include <fstream>

#include <doctest.h>

#include "poise/fixtures.hpp"
#include "poise/loop.hpp"
#include "poise/reports.hpp"
#include "test_util.hpp"

using namespace poise;
using testutil::fixture_path;

TEST_SUITE_BEGIN("fixtures");

TEST_CASE("reference results fixture loads, validates, and has 64 rows") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  CHECK(store.rows.size() == 64);
  CHECK(store.row("GRPO").overall == doctest::Approx(47.8));
  CHECK(store.row("VM-AV-GRPO").overall == doctest::Approx(52.5));
  CHECK(store.row("GCE-GRPO").overall == doctest::Approx(14.1));
  CHECK(store.rounds.size() == 2);
  CHECK(store.retention_parents.size() == 5);
}

TEST_CASE("fixture loader rejects a corrupted score naming the row") {
  nlohmann::json j;
  std::ifstream f(fixture_path("paper_results.json"));
  f >> j;
  // corrupt one score of a named row
  for (auto& row : j["rows"]) {
    if (row["name"] == "AV-GRPO") row["scores"][2] = 10.0;
  }
  const std::string path = "/tmp/poise_corrupt_fixture.json";
  {
    std::ofstream out(path);
    out << j.dump();
  }
  try {
    load_fixture_store(path);
    FAIL("expected a load error");
  } catch (const PoiseError& e) {
    CHECK(std::string(e.what()).find("AV-GRPO") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("fixture forest holds the stated chains and nothing else") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree forest = fixture_forest(store);
  CHECK(forest.size() == 64);
  // stated chain: GRPO -> RF -> BN -> AV -> VM-AV
  CHECK(forest.get("RF-GRPO").parent_id == std::optional<std::string>("GRPO"));
  CHECK(forest.get("BN-GRPO").parent_id == std::optional<std::string>("RF-GRPO"));
  CHECK(forest.get("AV-GRPO").parent_id == std::optional<std::string>("BN-GRPO"));
  CHECK(forest.get("VM-AV-GRPO").parent_id == std::optional<std::string>("AV-GRPO"));
  CHECK(forest.get("VM-AV-GRPO").depth == 4);
  // unstated rows are roots of their own components
  CHECK_FALSE(forest.get("ANCHOR-GRPO").parent_id.has_value());
  CHECK_FALSE(forest.get("SD-GRPO").parent_id.has_value());
}

TEST_CASE("depth frontier over the baseline component reproduces the reference path") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree tree = fixture_component(store, "GRPO");
  CHECK(tree.size() == 10);  // GRPO + three stated chains
  const auto rows = depth_frontier(tree);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].cumulative_best == doctest::Approx(47.8).epsilon(1e-9));
  CHECK(rows[1].cumulative_best == doctest::Approx(49.9).epsilon(1e-9));
  CHECK(rows[2].cumulative_best == doctest::Approx(49.9).epsilon(1e-9));
  CHECK(rows[3].cumulative_best == doctest::Approx(50.9).epsilon(1e-9));
  CHECK(rows[4].cumulative_best == doctest::Approx(52.5).epsilon(1e-9));
}

TEST_CASE("retention report reproduces the five reference parent rows") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree forest = fixture_forest(store);
  const auto report =
      parent_retention_report(forest, store.rounds, store.retention_parents);

  auto row_of = [&](const std::string& parent) {
    for (const auto& r : report.rows) {
      if (r.parent_id == parent) return r;
    }
    FAIL("missing row for " << parent);
    return ParentRetentionRow{};
  };

  const auto bn = row_of("BN-GRPO");
  CHECK(bn.best_descendant_id == std::optional<std::string>("VM-AV-GRPO"));
  CHECK(bn.gain == doctest::Approx(8.3).epsilon(1e-9));
  const auto anchor = row_of("ANCHOR-GRPO");
  CHECK(anchor.best_descendant_id == std::optional<std::string>("LNA-GRPO"));
  CHECK(anchor.gain == doctest::Approx(5.4).epsilon(1e-9));
  const auto ra = row_of("RA-GRPO");
  CHECK(ra.best_descendant_id == std::optional<std::string>("MSA-GRPO"));
  CHECK(ra.gain == doctest::Approx(6.3).epsilon(1e-9));
  const auto gla = row_of("GLA-GRPO");
  CHECK(gla.best_descendant_id == std::optional<std::string>("PR-GRPO"));
  CHECK(gla.gain == doctest::Approx(2.4).epsilon(1e-9));
  const auto cfa = row_of("CFA-GRPO");
  CHECK(cfa.best_descendant_id == std::optional<std::string>("OCE-GRPO"));
  CHECK(cfa.gain == doctest::Approx(2.1).epsilon(1e-9));

  // both recorded rounds are reversals
  CHECK(report.rounds.size() == 2);
  CHECK(report.rounds[0].top_scoring_parent == "ZA-GRPO");
  CHECK(report.rounds[0].strongest_descendant_parent ==
        std::optional<std::string>("BN-GRPO"));
  CHECK(report.rounds[0].reversal);
  CHECK(report.rounds[1].top_scoring_parent == "GA2-GRPO");
  CHECK(report.rounds[1].strongest_descendant_parent ==
        std::optional<std::string>("RA-GRPO"));
  CHECK(report.rounds[1].reversal);
  CHECK(report.reversal_count == 2);
}

TEST_CASE("compression fixture: ratios validate and the frontier holds DACE") {
  const FixtureStore store = load_fixture_store(fixture_path("compression_results.json"));
  CHECK(store.rows.size() == 11);
  const LineageTree forest = fixture_forest(store);
  const auto rows = tradeoff_rows(forest, "GRPO");
  REQUIRE(rows.size() == 11);
  bool dace_on_frontier = false;
  for (const auto& r : rows) {
    if (r.name == "DACE-GRPO") {
      CHECK(r.ratio == doctest::Approx(0.709).epsilon(0.001));
      dace_on_frontier = r.on_frontier;
    }
    if (r.name == "MCE-GRPO") CHECK(r.ratio == doctest::Approx(0.506).epsilon(0.001));
    if (r.name == "CAS-GRPO") CHECK(r.ratio == doctest::Approx(2.306).epsilon(0.001));
  }
  CHECK(dace_on_frontier);
}

TEST_CASE("frontier report prints reference values at 1 decimal") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree tree = fixture_component(store, "GRPO");
  const std::string csv = frontier_report(tree, ReportFormat::csv);
  CHECK(csv.find("0,47.8") != std::string::npos);
  CHECK(csv.find("4,52.5") != std::string::npos);
  // byte-identical across invocations
  CHECK(csv == frontier_report(tree, ReportFormat::csv));
}

TEST_CASE("retention report CSV carries the BN row verbatim") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree forest = fixture_forest(store);
  const auto report =
      parent_retention_report(forest, store.rounds, store.retention_parents);
  const std::string csv = retention_report_text(report, ReportFormat::csv);
  CHECK(csv.find("BN-GRPO,44.2,VM-AV-GRPO,52.5,+8.3") != std::string::npos);
  CHECK(csv.find("RA-GRPO,44.4,MSA-GRPO,50.7,+6.3") != std::string::npos);
}

TEST_CASE("tradeoff report CSV carries the DACE row at 3-decimal ratio") {
  const FixtureStore store = load_fixture_store(fixture_path("compression_results.json"));
  const LineageTree forest = fixture_forest(store);
  const std::string csv = tradeoff_report(forest, "GRPO", ReportFormat::csv);
  CHECK(csv.find("DACE-GRPO,51.7,335.7,0.709,yes") != std::string::npos);
  CHECK(csv.find("CAS-GRPO,43.1,1092.3,2.306") != std::string::npos);
}

TEST_CASE("dot export contains the stated edges and labeled nodes") {
  const FixtureStore store = load_fixture_store(fixture_path("paper_results.json"));
  const LineageTree forest = fixture_forest(store);
  const std::string dot = dot_export(forest);
  CHECK(dot.find("\"GRPO\" -> \"RF-GRPO\";") != std::string::npos);
  CHECK(dot.find("\"BN-GRPO\" -> \"AV-GRPO\";") != std::string::npos);
  CHECK(dot.find("VM-AV-GRPO (52.5)") != std::string::npos);
  CHECK(dot.rfind("digraph lineage {", 0) == 0);
}

TEST_CASE("dot export of a chain has n-1 edges; empty tree gives an empty graph") {
  LineageTree tree;
  tree.append(testutil::entry_of("a", std::nullopt, 1));
  tree.append(testutil::entry_of("b", "a", 2));
  tree.append(testutil::entry_of("c", "b", 3));
  const std::string dot = dot_export(tree);
  std::size_t edges = 0, pos = 0;
  while ((pos = dot.find("->", pos)) != std::string::npos) {
    ++edges;
    pos += 2;
  }
  CHECK(edges == 2);
  const std::string empty = dot_export(LineageTree{});
  CHECK(empty.find("->") == std::string::npos);
}

TEST_CASE("shipped default config matches the built-in defaults") {
  const RunConfig from_file =
      load_run_config(std::string(POISE_SOURCE_DIR) + "/configs/default_run.json");
  const RunConfig built_in = default_run_config();
  CHECK(nlohmann::json(from_file) == nlohmann::json(built_in));
}

TEST_SUITE_END();
