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

#include <doctest.h>

#include "poise/loop.hpp"
#include "test_util.hpp"

using namespace poise;
using testutil::entry_of;

namespace {

RunConfig small_config() {
  RunConfig cfg = default_run_config();
  cfg.trainer.steps = 6;
  cfg.generations = 2;
  cfg.parents_per_round = 1;
  cfg.population_size = 1;
  cfg.seed = 11;
  return cfg;
}

TrajectorySummary flat_trajectory(int steps, double entropy_first, double entropy_last,
                                  double all_fail_last = 0.0) {
  TrajectorySummary t;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps > 1 ? static_cast<double>(i) / (steps - 1) : 0.0;
    t.reward_curve.push_back(0.1);
    t.entropy_curve.push_back(entropy_first + (entropy_last - entropy_first) * frac);
    t.mean_length_curve.push_back(200.0);
    t.all_fail_fraction_curve.push_back(all_fail_last * frac);
    t.grad_norm_curve.push_back(1.0);
  }
  return t;
}

MetricVector metrics_of(double overall, double mean_length) {
  MetricVector m;
  m.scores = {overall, overall, overall, overall, overall, overall};
  m.mean_length = mean_length;
  m.overall = weighted_overall(m.scores);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("loop");

TEST_CASE("apply_constraint: none is the identity on overall") {
  const MetricVector base = metrics_of(47.8, 473.6);
  const MetricVector m = metrics_of(52.5, 400.0);
  CHECK(apply_constraint(m, base, Constraint::none) == m.overall);
}

TEST_CASE("apply_constraint orders the reference compression rows correctly") {
  const MetricVector base = metrics_of(47.8, 473.6);
  const MetricVector dace = metrics_of(51.7, 335.7);
  const MetricVector cas = metrics_of(43.1, 1092.3);
  const double u_dace = apply_constraint(dace, base, Constraint::length_compression);
  const double u_cas = apply_constraint(cas, base, Constraint::length_compression);
  CHECK(u_dace > u_cas);
  // bonus applies: ratio 0.709, accuracy above baseline
  CHECK(u_dace > dace.overall);
  // penalty applies: ratio 2.306
  CHECK(u_cas < cas.overall);
}

TEST_CASE("apply_constraint: no bonus below the accuracy tolerance gate") {
  const MetricVector base = metrics_of(47.8, 473.6);
  const MetricVector short_but_weak = metrics_of(40.0, 236.8);  // ratio 0.5
  const double u =
      apply_constraint(short_but_weak, base, Constraint::length_compression);
  CHECK(u == doctest::Approx(40.0));  // no penalty (ratio < 1), no bonus (gate)
}

TEST_CASE("verify_candidate: clip order violation is rejected by name") {
  Genome g = default_grpo_genome();
  g.estimator.clip_lo = 3.0;
  g.estimator.clip_hi = -3.0;
  const VerifyResult v = verify_candidate(g, TrainerConfig{});
  CHECK_FALSE(v.ok);
  CHECK(v.failed_check == "clip_order");
}

TEST_CASE("verify_candidate: a valid grpo genome passes with a finite smoke run") {
  const VerifyResult v = verify_candidate(default_grpo_genome(), TrainerConfig{});
  CHECK(v.ok);
  CHECK(v.failed_check.empty());
  CHECK(v.range_report.empty());
}

TEST_CASE("verify_candidate: sigma_fixed = 0 NaN is caught at the smoke step") {
  Genome g = default_grpo_genome();
  g.estimator.algorithm = Algorithm::sa;
  g.estimator.sigma_fixed = 0.0;
  g.descriptor = "sa-degenerate";
  const VerifyResult v = verify_candidate(g, TrainerConfig{});
  CHECK_FALSE(v.ok);
  CHECK(v.failed_check == "smoke_nonfinite");
}

TEST_CASE("verify_candidate reports out-of-range fields without rewriting them") {
  Genome g = default_grpo_genome();
  g.estimator.lambda_len = 100.0;  // far outside the declared range, still finite math
  g.descriptor = "wild";
  const VerifyResult v = verify_candidate(g, TrainerConfig{});
  CHECK(v.ok);
  REQUIRE(v.range_report.size() == 1);
  CHECK(v.range_report[0].field == std::string("lambda_len"));
}

TEST_CASE("reflect: tags follow the fixed thresholds and deltas are child minus parent") {
  ArchiveEntry parent = entry_of("p", std::nullopt, 47.8, 400.0);
  parent.trajectory = flat_trajectory(10, 2.0, 1.8);

  SUBCASE("reward gain with magnitude recorded") {
    const Reflection r =
        reflect(parent, metrics_of(52.4, 400.0), flat_trajectory(10, 2.0, 1.8));
    CHECK(r.has(ReflectionTag::reward_gain));
    CHECK(r.deltas.at("overall") == doctest::Approx(52.4 - 47.8));
    CHECK_FALSE(r.has(ReflectionTag::reward_regression));
    CHECK(r.note.find("overall improved") != std::string::npos);
  }
  SUBCASE("entropy collapse below 10 percent of the initial entropy") {
    const Reflection r =
        reflect(parent, metrics_of(47.8, 400.0), flat_trajectory(10, 2.0, 0.1));
    CHECK(r.has(ReflectionTag::entropy_collapse));
  }
  SUBCASE("all-fail stagnation when the final fraction exceeds one half") {
    const Reflection r =
        reflect(parent, metrics_of(47.8, 400.0), flat_trajectory(10, 2.0, 1.8, 0.9));
    CHECK(r.has(ReflectionTag::all_fail_stagnation));
  }
  SUBCASE("length drift both ways at the 20 percent threshold") {
    CHECK(reflect(parent, metrics_of(47.8, 500.0), flat_trajectory(4, 2, 2))
              .has(ReflectionTag::length_drift_up));
    CHECK(reflect(parent, metrics_of(47.8, 300.0), flat_trajectory(4, 2, 2))
              .has(ReflectionTag::length_drift_down));
    CHECK_FALSE(reflect(parent, metrics_of(47.8, 410.0), flat_trajectory(4, 2, 2))
                    .has(ReflectionTag::length_drift_up));
  }
  SUBCASE("instability when the gradient peak exceeds ten times the median") {
    TrajectorySummary spiky = flat_trajectory(11, 2.0, 1.8);
    spiky.grad_norm_curve[5] = 100.0;
    const Reflection r = reflect(parent, metrics_of(47.8, 400.0), spiky);
    CHECK(r.has(ReflectionTag::instability));
  }
  SUBCASE("reflection is a pure function of its inputs") {
    const auto m = metrics_of(50.0, 380.0);
    const auto t = flat_trajectory(8, 2.0, 1.5);
    CHECK(reflect(parent, m, t) == reflect(parent, m, t));
  }
}

TEST_CASE("run_iteration: P=1, n=1, 2 generations gives a 3-entry 2-deep chain") {
  RunConfig cfg = small_config();
  cfg.seed = 1;  // fixed seed whose first child earns reselection
  LineageTree archive;
  ProgressLog log(nullptr);
  const RunSummary summary = run_loop(archive, cfg, log);
  CHECK(summary.archive_size == 3);
  CHECK(archive.entries()[0].depth == 0);
  int max_depth = 0;
  for (const auto& e : archive.entries()) max_depth = std::max(max_depth, e.depth);
  CHECK(max_depth == 2);
}

TEST_CASE("run_loop is byte-identical across two runs with the same seed") {
  RunConfig cfg = small_config();
  cfg.generations = 2;
  cfg.parents_per_round = 2;
  cfg.population_size = 2;
  LineageTree a, b;
  ProgressLog log(nullptr);
  run_loop(a, cfg, log);
  run_loop(b, cfg, log);
  CHECK(archive_to_jsonl(a) == archive_to_jsonl(b));
}

TEST_CASE("run_loop never mutates existing entries across iterations") {
  RunConfig cfg = small_config();
  cfg.generations = 1;
  LineageTree archive;
  ProgressLog log(nullptr);
  run_loop(archive, cfg, log);
  const std::vector<ArchiveEntry> snapshot = archive.entries();
  cfg.generations = 2;
  // continue the same archive for one more generation
  run_iteration(archive, cfg, 2, log);
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    CHECK(archive.entries()[i] == snapshot[i]);
  }
}

TEST_CASE("every entry of a run satisfies the type invariants") {
  RunConfig cfg = small_config();
  cfg.generations = 2;
  cfg.parents_per_round = 2;
  cfg.population_size = 3;
  LineageTree archive;
  ProgressLog log(nullptr);
  run_loop(archive, cfg, log);
  std::set<std::string> descriptors;
  for (const auto& e : archive.entries()) {
    e.metrics.validate();
    e.trajectory.validate();
    CHECK(genome_is_valid(e.genome));
    CHECK(descriptors.insert(e.genome.descriptor).second);
    if (e.parent_id) {
      CHECK(archive.contains(*e.parent_id));
      CHECK(e.depth == archive.get(*e.parent_id).depth + 1);
    } else {
      CHECK(e.depth == 0);
    }
  }
}

TEST_CASE("run config round-trips through JSON and validates") {
  const RunConfig cfg = default_run_config();
  const nlohmann::json j = cfg;
  const RunConfig back = j.get<RunConfig>();
  CHECK(back.generations == cfg.generations);
  CHECK(back.train_tasks == cfg.train_tasks);
  CHECK(back.eval_tasks == cfg.eval_tasks);
  CHECK(back.trainer == cfg.trainer);

  RunConfig overlapping = cfg;
  overlapping.eval_tasks[0].task_id = cfg.train_tasks[0].task_id;
  CHECK_THROWS_AS(overlapping.validate(), PoiseError);
}

TEST_CASE("loop with an external proposer falls back internally on transport failure") {
  class FailingTransport : public ProposerTransport {
   public:
    std::string exchange(const std::string&) override {
      throw PoiseError("transport down");
    }
  };
  RunConfig cfg = small_config();
  cfg.generations = 1;
  LineageTree archive;
  ProgressLog log(nullptr);
  FailingTransport transport;
  const RunSummary summary = run_loop(archive, cfg, log, &transport);
  CHECK(summary.archive_size == 2);  // root + one internally generated child
}

TEST_CASE("externally proposed genomes flow through screening into the archive") {
  // Returns one fresh, in-range genome per exchange; sigma_min varies per
  // call so candidates never collide with archived content.
  class CountingProposer : public ProposerTransport {
   public:
    std::string exchange(const std::string& request_line) override {
      const auto req = nlohmann::json::parse(request_line);
      CHECK(req.at("type") == "proposal_request");
      Genome g = default_grpo_genome();
      g.estimator.algorithm = Algorithm::av;
      g.estimator.sigma_min = 0.05 + 0.01 * static_cast<double>(++calls_);
      g.descriptor = "external-" + std::to_string(calls_);
      nlohmann::json res;
      res["genomes"] = std::vector<Genome>{g};
      return res.dump();
    }

   private:
    int calls_ = 0;
  };
  RunConfig cfg = small_config();
  cfg.generations = 2;
  LineageTree archive;
  ProgressLog log(nullptr);
  CountingProposer transport;
  run_loop(archive, cfg, log, &transport);
  int external = 0;
  for (const auto& e : archive.entries()) {
    if (e.node_id.rfind("external-", 0) == 0) ++external;
  }
  CHECK(external >= 1);
}

TEST_CASE("batch estimators train end to end with finite curves") {
  RunConfig cfg = small_config();
  for (Algorithm alg : {Algorithm::bn, Algorithm::sa}) {
    Genome g = default_grpo_genome();
    g.estimator.algorithm = alg;
    g.descriptor = to_string(alg);
    TrainerConfig trainer = cfg.trainer;
    trainer.steps = 8;
    const TrainingResult r = run_training(g, cfg.train_tasks, trainer);
    CHECK(r.trajectory.steps() == 8);
    CHECK(all_finite(r.trajectory.grad_norm_curve));
    CHECK(all_finite(r.trajectory.reward_curve));
  }
}

TEST_CASE("compression-constrained runs complete deterministically and rank by the penalized utility") {
  RunConfig cfg = small_config();
  cfg.generations = 2;
  cfg.parents_per_round = 2;
  cfg.population_size = 2;
  cfg.constraint = Constraint::length_compression;
  LineageTree a, b;
  ProgressLog log(nullptr);
  run_loop(a, cfg, log);
  run_loop(b, cfg, log);
  CHECK(archive_to_jsonl(a) == archive_to_jsonl(b));
  CHECK(a.size() >= 2);

  // the acquisition utility equals apply_constraint against the root
  const MetricVector baseline = a.entries().front().metrics;
  const auto ctx = build_acquisition_context(
      a, cfg.acquisition, utility_fn(cfg, a));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double expected = apply_constraint(a.entries()[i].metrics, baseline,
                                             Constraint::length_compression,
                                             cfg.compression);
    CHECK(ctx.utilities[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_SUITE_END();
