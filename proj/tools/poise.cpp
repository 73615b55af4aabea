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
// poise CLI: run searches, inspect archives, load fixtures, emit report
// data.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poise/fixtures.hpp"
#include "poise/loop.hpp"
#include "poise/proposer_http.hpp"
#include "poise/proposer_transport.hpp"
#include "poise/reports.hpp"

namespace {

poise::LineageTree load_tree_for_reports(const std::string& archive_path,
                                         const std::string& fixture_path) {
  if (!archive_path.empty()) return poise::load_archive(archive_path);
  const poise::FixtureStore store = poise::load_fixture_store(fixture_path);
  return poise::fixture_forest(store);
}

std::unique_ptr<poise::ProposerTransport> proposer_from_env() {
  if (const char* url = std::getenv("POISE_PROPOSER_URL")) {
    return std::make_unique<poise::HttpProposer>(url);
  }
  if (const char* cmd = std::getenv("POISE_PROPOSER_CMD")) {
    return std::make_unique<poise::SubprocessProposer>(cmd);
  }
  return nullptr;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> generations, std::optional<std::string> archive_path,
            std::optional<std::string> constraint, std::optional<int> steps,
            std::optional<int> group_size) {
  poise::RunConfig cfg = poise::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (generations) cfg.generations = *generations;
  if (archive_path) cfg.archive_path = *archive_path;
  if (constraint) cfg.constraint = poise::constraint_from_string(*constraint);
  if (steps) cfg.trainer.steps = *steps;
  if (group_size) cfg.trainer.group_size = *group_size;
  cfg.validate();

  poise::LineageTree archive;
  poise::ProgressLog log(&std::cerr);
  std::unique_ptr<poise::ProposerTransport> proposer = proposer_from_env();
  const poise::RunSummary summary = poise::run_loop(archive, cfg, log, proposer.get());
  poise::save_archive(archive, cfg.archive_path);
  std::cout << "archive " << cfg.archive_path << " entries " << summary.archive_size
            << " best " << summary.best_node << " overall "
            << poise::fmt_fixed(summary.best_overall, 1) << "\n";
  return 0;
}

int cmd_report(const std::string& archive_path, const std::string& fixture_path,
               const std::string& kind, const std::string& format,
               const std::string& baseline) {
  const poise::ReportFormat fmt = poise::report_format_from_string(format);
  if (kind == "frontier") {
    poise::LineageTree tree = [&]() {
      if (!archive_path.empty()) return poise::load_archive(archive_path);
      const poise::FixtureStore store = poise::load_fixture_store(fixture_path);
      // Depth analytics need a single-root tree; use the baseline component.
      const std::string root = baseline.empty() ? "GRPO" : baseline;
      return poise::fixture_component(store, root);
    }();
    std::cout << poise::frontier_report(tree, fmt);
    return 0;
  }
  if (kind == "retention") {
    if (!archive_path.empty()) {
      const poise::LineageTree tree = poise::load_archive(archive_path);
      // Rounds recovered from creation order: the parents of generation g.
      std::map<int, std::set<std::string>> by_gen;
      for (const auto& e : tree.entries()) {
        if (e.parent_id) by_gen[e.created_at].insert(*e.parent_id);
      }
      std::vector<std::vector<std::string>> rounds;
      for (const auto& [gen, parents] : by_gen) {
        rounds.emplace_back(parents.begin(), parents.end());
      }
      std::cout << poise::retention_report_text(
          poise::parent_retention_report(tree, rounds), fmt);
      return 0;
    }
    const poise::FixtureStore store = poise::load_fixture_store(fixture_path);
    const poise::LineageTree tree = poise::fixture_forest(store);
    std::cout << poise::retention_report_text(
        poise::parent_retention_report(tree, store.rounds, store.retention_parents), fmt);
    return 0;
  }
  if (kind == "tradeoff") {
    std::string base = baseline;
    if (base.empty() && archive_path.empty()) {
      base = poise::load_fixture_store(fixture_path).baseline.value_or("GRPO");
    }
    const poise::LineageTree tree = load_tree_for_reports(archive_path, fixture_path);
    if (base.empty()) base = tree.entries().front().node_id;
    std::cout << poise::tradeoff_report(tree, base, fmt);
    return 0;
  }
  throw poise::PoiseError("unknown report kind: " + kind);
}

int cmd_score(const std::string& archive_path, const std::string& node,
              const std::string& constraint_name) {
  const poise::LineageTree tree = poise::load_archive(archive_path);
  const poise::Constraint constraint = poise::constraint_from_string(constraint_name);
  const poise::MetricVector baseline = tree.entries().front().metrics;
  const auto utility = [&](const poise::ArchiveEntry& e) {
    return poise::apply_constraint(e.metrics, baseline, constraint);
  };
  const poise::AcquisitionContext ctx =
      poise::build_acquisition_context(tree, poise::AcquisitionWeights{}, utility);
  const poise::ScoreBreakdown b = poise::score_node_breakdown(ctx, node);
  nlohmann::json j{{"node", node},
                   {"u_pareto", b.u_pareto},
                   {"u_perf", b.u_perf},
                   {"u_div", b.u_div},
                   {"alpha_gp", b.alpha_gp},
                   {"score", b.total}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_estimate(const std::string& estimator_name) {
  const poise::Algorithm alg = poise::algorithm_from_string(estimator_name);
  nlohmann::json input;
  try {
    std::cin >> input;
  } catch (const nlohmann::json::exception& e) {
    throw poise::PoiseError(std::string("estimate: malformed input JSON: ") + e.what());
  }
  poise::EstimatorConfig cfg;
  if (input.contains("config")) {
    nlohmann::json cj = input.at("config");
    if (!cj.contains("algorithm")) cj["algorithm"] = estimator_name;
    cfg = cj.get<poise::EstimatorConfig>();
  }
  cfg.algorithm = alg;

  std::vector<poise::RewardGroup> groups;
  if (input.contains("groups")) {
    groups = input.at("groups").get<std::vector<poise::RewardGroup>>();
  } else {
    groups.push_back(input.get<poise::RewardGroup>());
  }
  for (const auto& g : groups) g.validate();
  const std::vector<poise::AdvantageVector> out = poise::estimate_batch(groups, cfg);
  if (out.size() == 1 && !input.contains("groups")) {
    std::cout << nlohmann::json(out.front()).dump(2) << "\n";
  } else {
    std::cout << nlohmann::json(out).dump(2) << "\n";
  }
  return 0;
}

int cmd_fixtures(const std::string& file, const std::string& out_path) {
  const poise::FixtureStore store = poise::load_fixture_store(file);
  std::cout << store.rows.size() << " rows loaded, overall column verified\n";
  if (!out_path.empty()) {
    poise::save_archive(poise::fixture_forest(store), out_path);
    std::cout << "wrote archive-compatible store to " << out_path << "\n";
  }
  return 0;
}

int cmd_export(const std::string& archive_path, const std::string& fixture_path) {
  const poise::LineageTree tree = load_tree_for_reports(archive_path, fixture_path);
  std::cout << poise::dot_export(tree);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poise: closed-loop discovery over advantage estimators"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run the closed-loop search");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_generations;
  std::optional<std::string> run_archive, run_constraint;
  std::optional<int> run_steps, run_group_size;
  run->add_option("--config", run_config, "run config JSON file")->required();
  run->add_option("--seed", run_seed, "override the run seed");
  run->add_option("--generations", run_generations, "override generation count");
  run->add_option("--archive", run_archive, "override archive output path");
  run->add_option("--constraint", run_constraint, "none | length_compression");
  run->add_option("--steps", run_steps, "override training steps per candidate");
  run->add_option("--group-size", run_group_size, "override rollout group size G");

  // report
  auto* report = app.add_subcommand("report", "emit frontier/retention/tradeoff data");
  std::string rep_archive, rep_fixture, rep_kind, rep_format = "csv", rep_baseline;
  report->add_option("--archive", rep_archive, "run archive (.jsonl)");
  report->add_option("--fixture", rep_fixture, "fixture store (.json)");
  report->add_option("--kind", rep_kind, "frontier | retention | tradeoff")->required();
  report->add_option("--format", rep_format, "csv | json");
  report->add_option("--baseline", rep_baseline, "baseline node for ratios / frontier root");

  // score
  auto* score = app.add_subcommand("score", "print the acquisition breakdown of a node");
  std::string score_archive, score_node, score_constraint = "none";
  score->add_option("--archive", score_archive, "run archive (.jsonl)")->required();
  score->add_option("--node", score_node, "node id")->required();
  score->add_option("--constraint", score_constraint, "none | length_compression");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "apply an estimator to a group on stdin");
  std::string est_name;
  estimate->add_option("--estimator", est_name, "estimator name")->required();

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "load and validate a fixture store");
  std::string fix_file, fix_out;
  fixtures->add_option("--file", fix_file, "fixture JSON file")->required();
  fixtures->add_option("--out", fix_out, "write archive-compatible JSONL here");

  // export
  auto* exp = app.add_subcommand("export", "DOT export of the lineage");
  std::string exp_archive, exp_fixture;
  exp->add_option("--archive", exp_archive, "run archive (.jsonl)");
  exp->add_option("--fixture", exp_fixture, "fixture store (.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_config, run_seed, run_generations, run_archive, run_constraint,
                     run_steps, run_group_size);
    }
    if (report->parsed()) {
      if (rep_archive.empty() && rep_fixture.empty()) {
        throw poise::PoiseError("report: need --archive or --fixture");
      }
      return cmd_report(rep_archive, rep_fixture, rep_kind, rep_format, rep_baseline);
    }
    if (score->parsed()) return cmd_score(score_archive, score_node, score_constraint);
    if (estimate->parsed()) return cmd_estimate(est_name);
    if (fixtures->parsed()) return cmd_fixtures(fix_file, fix_out);
    if (exp->parsed()) {
      if (exp_archive.empty() && exp_fixture.empty()) {
        throw poise::PoiseError("export: need --archive or --fixture");
      }
      return cmd_export(exp_archive, exp_fixture);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
