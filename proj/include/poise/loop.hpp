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
// Closed-loop coordinator: parent selection, proposal, verification,
// training, evaluation, reflection, and archive update, with the optional
// length-compression constraint mode.

#ifndef POISE_LOOP_HPP_
#define POISE_LOOP_HPP_

#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/acquisition.hpp"
#include "poise/archive.hpp"
#include "poise/env.hpp"
#include "poise/proposal.hpp"

namespace poise {

enum class Constraint { none, length_compression };

inline std::string to_string(Constraint c) {
  return c == Constraint::none ? "none" : "length_compression";
}

inline Constraint constraint_from_string(const std::string& s) {
  if (s == "none") return Constraint::none;
  if (s == "length_compression") return Constraint::length_compression;
  throw PoiseError("unknown constraint: " + s);
}

struct CompressionParams {
  double penalty = 5.0;    // Overall points per unit of ratio above 1
  double bonus = 5.0;      // Overall points per unit of ratio below 1
  double tolerance = 1.0;  // Overall points the child may trail the baseline
};

inline void to_json(nlohmann::json& j, const CompressionParams& c) {
  j = nlohmann::json{{"penalty", c.penalty}, {"bonus", c.bonus}, {"tolerance", c.tolerance}};
}

inline void from_json(const nlohmann::json& j, CompressionParams& c) {
  c = CompressionParams{};
  c.penalty = j.value("penalty", 5.0);
  c.bonus = j.value("bonus", 5.0);
  c.tolerance = j.value("tolerance", 1.0);
}

// Scalar selection utility. Under `none` this is exactly the weighted
// overall; under length compression, long outputs are penalized and short
// ones earn a bonus only while accuracy stays within tolerance of the
// baseline.
inline double apply_constraint(const MetricVector& metrics, const MetricVector& baseline,
                               Constraint constraint,
                               const CompressionParams& params = CompressionParams{}) {
  if (constraint == Constraint::none) return metrics.overall;
  require(baseline.mean_length > 0.0, "apply_constraint: zero baseline length");
  const double ratio = metrics.mean_length / baseline.mean_length;
  double u = metrics.overall - params.penalty * std::max(0.0, ratio - 1.0);
  if (metrics.overall >= baseline.overall - params.tolerance) {
    u += params.bonus * std::max(0.0, 1.0 - ratio);
  }
  return u;
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

struct RunConfig {
  int generations = 3;
  int parents_per_round = 3;
  int population_size = 4;
  TrainerConfig trainer;
  AcquisitionWeights acquisition;
  ContextSizes context_sizes;
  Constraint constraint = Constraint::none;
  CompressionParams compression;
  std::uint64_t seed = 1;
  std::string archive_path = "archive.jsonl";
  std::vector<TaskSpec> train_tasks;
  std::vector<TaskSpec> eval_tasks;

  void validate() const {
    require(generations >= 1, "RunConfig: generations must be >= 1");
    require(parents_per_round >= 1, "RunConfig: parents_per_round must be >= 1");
    require(population_size >= 1, "RunConfig: population_size must be >= 1");
    trainer.validate();
    acquisition.validate();
    require(!train_tasks.empty(), "RunConfig: no training tasks");
    require(!eval_tasks.empty(), "RunConfig: no eval tasks");
    std::set<std::string> train_ids;
    for (const auto& t : train_tasks) {
      t.validate();
      train_ids.insert(t.task_id);
    }
    for (const auto& t : eval_tasks) {
      t.validate();
      require(!train_ids.count(t.task_id),
              "RunConfig: eval task overlaps training set: " + t.task_id);
    }
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"generations", c.generations},
                     {"parents_per_round", c.parents_per_round},
                     {"population_size", c.population_size},
                     {"trainer", c.trainer},
                     {"acquisition", c.acquisition},
                     {"context_sizes", c.context_sizes},
                     {"constraint", to_string(c.constraint)},
                     {"compression", c.compression},
                     {"seed", c.seed},
                     {"archive_path", c.archive_path},
                     {"train_tasks", c.train_tasks},
                     {"eval_tasks", c.eval_tasks}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  c.generations = j.value("generations", 3);
  c.parents_per_round = j.value("parents_per_round", 3);
  c.population_size = j.value("population_size", 4);
  if (j.contains("trainer")) c.trainer = j.at("trainer").get<TrainerConfig>();
  if (j.contains("acquisition")) c.acquisition = j.at("acquisition").get<AcquisitionWeights>();
  if (j.contains("context_sizes")) c.context_sizes = j.at("context_sizes").get<ContextSizes>();
  c.constraint = constraint_from_string(j.value("constraint", "none"));
  if (j.contains("compression")) c.compression = j.at("compression").get<CompressionParams>();
  c.seed = j.value("seed", static_cast<std::uint64_t>(1));
  c.archive_path = j.value("archive_path", "archive.jsonl");
  c.train_tasks = j.at("train_tasks").get<std::vector<TaskSpec>>();
  c.eval_tasks = j.at("eval_tasks").get<std::vector<TaskSpec>>();
  c.validate();
}

// ---------------------------------------------------------------------------
// Verification: structural schema check, a range report (out-of-range values
// are reported, not rewritten, so the smoke stage sees the candidate as
// proposed), then a 1-step smoke training run checking finite advantages and
// gradients.
// ---------------------------------------------------------------------------

struct VerifyResult {
  bool ok = false;
  std::string failed_check;  // empty when ok
  std::vector<RangeViolation> range_report;
};

inline std::vector<TaskSpec> smoke_tasks() {
  TaskSpec a;
  a.task_id = "smoke-mixed";
  a.bucket = Bucket::mid;
  a.n_strategies = 2;
  a.target_strategy = 0;
  a.format_noise = 0.3;
  a.length_base = 100.0;
  a.length_spread = 0.3;
  TaskSpec b;
  b.task_id = "smoke-hard";
  b.bucket = Bucket::hard_a;
  b.n_strategies = 16;
  b.target_strategy = 3;
  b.format_noise = 0.2;
  b.length_base = 300.0;
  b.length_spread = 0.4;
  return {a, b};
}

inline VerifyResult verify_candidate(const Genome& genome, const TrainerConfig& trainer) {
  VerifyResult result;
  if (genome.descriptor.empty()) {
    result.failed_check = "descriptor";
    return result;
  }
  if (!(genome.estimator.clip_lo < genome.estimator.clip_hi)) {
    result.failed_check = "clip_order";
    return result;
  }
  result.range_report = genome_range_violations(genome);

  TrainerConfig smoke_cfg = trainer;
  smoke_cfg.steps = 1;
  smoke_cfg.group_size = std::max(4, trainer.group_size);
  smoke_cfg.seed = 17;
  try {
    const TrainingResult r = run_training(genome, smoke_tasks(), smoke_cfg);
    if (!all_finite(r.trajectory.grad_norm_curve)) {
      result.failed_check = "smoke_nonfinite";
      return result;
    }
  } catch (const PoiseError&) {
    result.failed_check = "smoke_nonfinite";
    return result;
  }
  result.ok = true;
  return result;
}

// ---------------------------------------------------------------------------
// Reflection thresholds: entropy collapse below 10% of initial entropy,
// length drift at +/-20% vs parent, instability when the gradient-norm peak
// exceeds 10x its median, reward gain/regression at +/-0.5 Overall.
// ---------------------------------------------------------------------------

namespace detail {

inline void tag_own_trajectory(Reflection& r, const TrajectorySummary& traj) {
  if (!traj.entropy_curve.empty()) {
    const double first = traj.entropy_curve.front();
    const double last = traj.entropy_curve.back();
    if (first > 0.0 && last < 0.1 * first) r.tags.insert(ReflectionTag::entropy_collapse);
  }
  if (!traj.all_fail_fraction_curve.empty() && traj.all_fail_fraction_curve.back() > 0.5) {
    r.tags.insert(ReflectionTag::all_fail_stagnation);
  }
  if (!traj.grad_norm_curve.empty()) {
    const double peak = *std::max_element(traj.grad_norm_curve.begin(),
                                          traj.grad_norm_curve.end());
    const double med = median(traj.grad_norm_curve);
    if (peak > 0.0 && peak > 10.0 * med) r.tags.insert(ReflectionTag::instability);
  }
}

inline std::string reflection_note(const Reflection& r) {
  if (r.tags.empty()) return "no notable deviations";
  std::string note;
  auto add = [&note](const std::string& s) {
    if (!note.empty()) note += "; ";
    note += s;
  };
  for (ReflectionTag t : r.tags) {
    switch (t) {
      case ReflectionTag::entropy_collapse:
        add("policy entropy collapsed during training");
        break;
      case ReflectionTag::all_fail_stagnation:
        add("most groups ended with no correct sample");
        break;
      case ReflectionTag::reward_gain:
        add("overall improved by " + fmt_fixed(r.deltas.at("overall"), 1) + " vs parent");
        break;
      case ReflectionTag::reward_regression:
        add("overall regressed by " + fmt_fixed(r.deltas.at("overall"), 1) + " vs parent");
        break;
      case ReflectionTag::length_drift_up:
        add("mean length drifted up vs parent");
        break;
      case ReflectionTag::length_drift_down:
        add("mean length drifted down vs parent");
        break;
      case ReflectionTag::instability:
        add("gradient norm spiked above 10x its median");
        break;
    }
  }
  return note;
}

}  // namespace detail

// Pure function of (parent record, child outcome). Deltas are child - parent
// per metric key.
inline Reflection reflect(const ArchiveEntry& parent, const MetricVector& child_metrics,
                          const TrajectorySummary& child_trajectory) {
  Reflection r;
  for (int b = 0; b < kNumBuckets; ++b) {
    r.deltas[bucket_names()[b]] =
        child_metrics.scores[b] - parent.metrics.scores[b];
  }
  r.deltas["overall"] = child_metrics.overall - parent.metrics.overall;
  r.deltas["mean_length"] = child_metrics.mean_length - parent.metrics.mean_length;

  if (r.deltas["overall"] >= 0.5) r.tags.insert(ReflectionTag::reward_gain);
  if (r.deltas["overall"] <= -0.5) r.tags.insert(ReflectionTag::reward_regression);
  if (parent.metrics.mean_length > 0.0) {
    const double rel = child_metrics.mean_length / parent.metrics.mean_length;
    if (rel > 1.2) r.tags.insert(ReflectionTag::length_drift_up);
    if (rel < 0.8) r.tags.insert(ReflectionTag::length_drift_down);
  }
  detail::tag_own_trajectory(r, child_trajectory);
  r.note = detail::reflection_note(r);
  return r;
}

// The baseline reflects against itself: empty deltas, trajectory tags only.
inline Reflection reflect_root(const TrajectorySummary& trajectory) {
  Reflection r;
  detail::tag_own_trajectory(r, trajectory);
  r.note = "baseline; " + detail::reflection_note(r);
  return r;
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

// One JSON object per event, for downstream tooling.
class ProgressLog {
 public:
  explicit ProgressLog(std::ostream* out = nullptr) : out_(out) {}

  void emit(const std::string& event, nlohmann::json fields = {}) const {
    if (!out_) return;
    fields["event"] = event;
    (*out_) << fields.dump() << "\n";
  }

 private:
  std::ostream* out_;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  Rng r(base);
  return r.fork(a * 1000003ULL + b).next_u64();
}

struct ChildOutcome {
  std::optional<ArchiveEntry> entry;
  std::string parent_id;
  std::string note;  // rejection reason when no entry
};

struct EvaluatedRun {
  TrajectorySummary trajectory;
  MetricVector metrics;
};

inline EvaluatedRun train_and_evaluate(const Genome& genome, const RunConfig& cfg,
                                       std::uint64_t train_seed) {
  TrainerConfig train_cfg = cfg.trainer;
  train_cfg.seed = train_seed;
  const TrainingResult tr = run_training(genome, cfg.train_tasks, train_cfg);
  const PolicyState eval_policy =
      map_policy_to_tasks(tr.policy, cfg.train_tasks, cfg.eval_tasks);
  EvaluatedRun out;
  out.trajectory = tr.trajectory;
  out.metrics = evaluate_policy(eval_policy, cfg.eval_tasks);
  return out;
}

}  // namespace detail

// Expands one selected parent into at most one verified, trained, evaluated
// child. `proposer` may be null (internal mutation only).
inline detail::ChildOutcome expand_parent(const LineageTree& archive,
                                          const AcquisitionContext& ctx,
                                          const RunConfig& cfg, int generation,
                                          const std::string& parent_id,
                                          ProposerTransport* proposer) {
  detail::ChildOutcome outcome;
  outcome.parent_id = parent_id;
  Rng rng(detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(generation),
                              fnv1a(parent_id)));
  const ReferenceSet refs = build_context(archive, parent_id, cfg.context_sizes, rng);

  std::vector<Genome> population;
  if (proposer) {
    try {
      ProposalRequest req =
          make_proposal_request(archive, parent_id, refs, to_string(cfg.constraint));
      ProposerResult res = external_proposer_exchange(*proposer, req);
      population = std::move(res.genomes);
    } catch (const PoiseError&) {
      population.clear();  // transport/schema failure: internal fallback
    }
  }
  if (population.empty()) {
    population = generate_population(archive.get(parent_id).genome, archive, refs,
                                     cfg.population_size, rng);
  }

  const ArchiveEntry& parent = archive.get(parent_id);
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<Genome> ranked;
    try {
      ranked = screen_and_rank(population, archive, ctx, parent_id);
    } catch (const PoiseError&) {
      ranked.clear();
    }
    for (const auto& genome : ranked) {
      const VerifyResult v = verify_candidate(genome, cfg.trainer);
      if (!v.ok) {
        outcome.note = "verification failed: " + v.failed_check;
        continue;
      }
      const std::uint64_t train_seed = detail::derive_seed(
          cfg.seed, static_cast<std::uint64_t>(generation), fnv1a(genome.descriptor));
      detail::EvaluatedRun run;
      try {
        run = detail::train_and_evaluate(genome, cfg, train_seed);
      } catch (const PoiseError& e) {
        outcome.note = std::string("training failed: ") + e.what();
        continue;
      }

      ArchiveEntry child;
      child.node_id = genome.descriptor;
      child.parent_id = parent_id;
      child.genome = genome;
      child.trajectory = run.trajectory;
      child.metrics = run.metrics;
      child.reflection = reflect(parent, run.metrics, run.trajectory);
      child.created_at = generation;
      outcome.entry = std::move(child);
      return outcome;
    }
    // Whole population failed verification: one regeneration, then give up.
    population = generate_population(parent.genome, archive, refs,
                                     cfg.population_size, rng);
  }
  if (outcome.note.empty()) outcome.note = "no viable candidate";
  return outcome;
}

inline std::function<double(const ArchiveEntry&)> utility_fn(const RunConfig& cfg,
                                                             const LineageTree& archive) {
  const MetricVector baseline = archive.entries().front().metrics;
  const Constraint constraint = cfg.constraint;
  const CompressionParams params = cfg.compression;
  return [baseline, constraint, params](const ArchiveEntry& e) {
    return apply_constraint(e.metrics, baseline, constraint, params);
  };
}

// One round: select P parents, expand each in a parallel worker, append the
// resulting children in parent order. Existing entries are never mutated.
inline void run_iteration(LineageTree& archive, const RunConfig& cfg, int generation,
                          const ProgressLog& log, ProposerTransport* proposer = nullptr) {
  require(!archive.empty(), "run_iteration: archive has no root");
  const AcquisitionContext ctx =
      build_acquisition_context(archive, cfg.acquisition, utility_fn(cfg, archive));
  const std::vector<std::string> parents = select_parents(ctx, cfg.parents_per_round);
  log.emit("parents_selected",
           {{"generation", generation}, {"parents", parents}});

  std::vector<std::future<detail::ChildOutcome>> futures;
  futures.reserve(parents.size());
  for (const auto& pid : parents) {
    futures.push_back(std::async(std::launch::async, [&archive, &ctx, &cfg, generation,
                                                      pid, proposer]() {
      return expand_parent(archive, ctx, cfg, generation, pid, proposer);
    }));
  }
  // Join every worker before the first append: workers read the archive.
  std::vector<detail::ChildOutcome> outcomes;
  outcomes.reserve(futures.size());
  for (auto& f : futures) outcomes.push_back(f.get());
  for (detail::ChildOutcome& outcome : outcomes) {
    if (outcome.entry) {
      archive.append(*outcome.entry);
      log.emit("child_appended", {{"generation", generation},
                                  {"parent", outcome.parent_id},
                                  {"node", outcome.entry->node_id},
                                  {"overall", outcome.entry->metrics.overall}});
    } else {
      log.emit("parent_exhausted", {{"generation", generation},
                                    {"parent", outcome.parent_id},
                                    {"reason", outcome.note}});
    }
  }
}

// Generation 0 trains and evaluates the default GRPO genome as the root.
inline ArchiveEntry bootstrap_root(const RunConfig& cfg) {
  const Genome genome = default_grpo_genome();
  const std::uint64_t train_seed =
      detail::derive_seed(cfg.seed, 0, fnv1a(genome.descriptor));
  const detail::EvaluatedRun run = detail::train_and_evaluate(genome, cfg, train_seed);
  ArchiveEntry root;
  root.node_id = genome.descriptor;
  root.genome = genome;
  root.trajectory = run.trajectory;
  root.metrics = run.metrics;
  root.reflection = reflect_root(run.trajectory);
  root.created_at = 0;
  return root;
}

struct RunSummary {
  std::string best_node;
  double best_overall = 0.0;
  std::size_t archive_size = 0;
};

inline RunSummary run_loop(LineageTree& archive, const RunConfig& cfg,
                           const ProgressLog& log, ProposerTransport* proposer = nullptr) {
  cfg.validate();
  if (archive.empty()) {
    archive.append(bootstrap_root(cfg));
    log.emit("root_bootstrapped",
             {{"node", archive.entries().front().node_id},
              {"overall", archive.entries().front().metrics.overall}});
  }
  for (int g = 1; g <= cfg.generations; ++g) {
    run_iteration(archive, cfg, g, log, proposer);
  }
  RunSummary summary;
  summary.archive_size = archive.size();
  for (const auto& e : archive.entries()) {
    if (summary.best_node.empty() || e.metrics.overall > summary.best_overall) {
      summary.best_node = e.node_id;
      summary.best_overall = e.metrics.overall;
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Default desk-scale curriculum: eight training tasks spanning the difficulty
// spread, two disjoint eval tasks per bucket.
// ---------------------------------------------------------------------------

inline RunConfig default_run_config() {
  RunConfig cfg;
  cfg.generations = 3;
  cfg.parents_per_round = 3;
  cfg.population_size = 4;
  cfg.trainer.learning_rate = 0.05;
  cfg.trainer.group_size = 8;
  cfg.trainer.steps = 40;
  cfg.trainer.beta_kl = 0.02;
  cfg.trainer.entropy_coeff = 0.0;
  cfg.seed = 1;

  auto task = [](const std::string& id, Bucket b, int n, int target, double noise,
                 double len_base) {
    TaskSpec t;
    t.task_id = id;
    t.bucket = b;
    t.n_strategies = n;
    t.target_strategy = target;
    t.format_noise = noise;
    t.length_base = len_base;
    t.length_spread = 0.3;
    return t;
  };

  cfg.train_tasks = {
      task("train-hard-a", Bucket::hard_a, 64, 17, 0.20, 350.0),
      task("train-hard-b", Bucket::hard_b, 64, 41, 0.20, 350.0),
      task("train-mid-1", Bucket::mid, 32, 6, 0.10, 250.0),
      task("train-mid-2", Bucket::mid, 32, 23, 0.10, 250.0),
      task("train-easy-a", Bucket::easy_a, 5, 1, 0.05, 180.0),
      task("train-easy-b", Bucket::easy_b, 6, 3, 0.05, 180.0),
      task("train-easy-c", Bucket::easy_c, 6, 2, 0.05, 200.0),
      task("train-easy-d", Bucket::easy_a, 4, 2, 0.05, 160.0),
  };
  // Held-out instances: one mirror of each trained competence plus an
  // off-target probe per hard bucket (unlearned, rewards exploration).
  cfg.eval_tasks = {
      task("eval-hard-a1", Bucket::hard_a, 64, 17, 0.20, 350.0),
      task("eval-hard-a2", Bucket::hard_a, 64, 9, 0.20, 350.0),
      task("eval-hard-b1", Bucket::hard_b, 64, 41, 0.20, 350.0),
      task("eval-hard-b2", Bucket::hard_b, 64, 2, 0.20, 350.0),
      task("eval-mid-1", Bucket::mid, 32, 6, 0.10, 250.0),
      task("eval-mid-2", Bucket::mid, 32, 23, 0.10, 250.0),
      task("eval-easy-a1", Bucket::easy_a, 5, 1, 0.05, 180.0),
      task("eval-easy-a2", Bucket::easy_a, 4, 2, 0.05, 160.0),
      task("eval-easy-b1", Bucket::easy_b, 6, 3, 0.05, 180.0),
      task("eval-easy-c1", Bucket::easy_c, 6, 2, 0.05, 200.0),
  };
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "load_run_config: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PoiseError("load_run_config: " + path + ": " + e.what());
  }
  return j.get<RunConfig>();
}

}  // namespace poise

#endif  // POISE_LOOP_HPP_
