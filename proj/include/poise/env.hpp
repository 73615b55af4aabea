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
// Surrogate training environment: a seeded sparse-reward categorical bandit
// population, a policy-gradient trainer driven by a pluggable advantage
// estimator, and the standardized evaluation that produces MetricVector and
// TrajectorySummary.

#ifndef POISE_ENV_HPP_
#define POISE_ENV_HPP_

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poise/common.hpp"
#include "poise/estimators.hpp"
#include "poise/genome.hpp"

namespace poise {

// ---------------------------------------------------------------------------
// Buckets mirror the six-benchmark evaluation structure: hard_a/hard_b/mid
// are scored best-of-32, easy_a/easy_b/easy_c by greedy accuracy.
// ---------------------------------------------------------------------------

enum class Bucket { hard_a, hard_b, mid, easy_a, easy_b, easy_c };

inline constexpr int kNumBuckets = 6;
inline constexpr int kPassAtK = 32;
inline constexpr int kMaxLength = 4096;

inline const std::array<const char*, kNumBuckets>& bucket_names() {
  static const std::array<const char*, kNumBuckets> kNames = {
      "hard_a", "hard_b", "mid", "easy_a", "easy_b", "easy_c"};
  return kNames;
}

inline std::string to_string(Bucket b) { return bucket_names()[static_cast<int>(b)]; }

inline Bucket bucket_from_string(const std::string& name) {
  for (int i = 0; i < kNumBuckets; ++i) {
    if (name == bucket_names()[i]) return static_cast<Bucket>(i);
  }
  throw PoiseError("unknown bucket: " + name);
}

inline bool bucket_uses_pass_at_k(Bucket b) {
  return b == Bucket::hard_a || b == Bucket::hard_b || b == Bucket::mid;
}

// One bandit task. `solvable = false` marks probe tasks where no strategy
// earns the correctness reward (all-fail curricula).
struct TaskSpec {
  std::string task_id;
  Bucket bucket = Bucket::mid;
  int n_strategies = 8;
  int target_strategy = 0;
  double format_noise = 0.0;
  double length_base = 200.0;
  double length_spread = 0.3;
  bool solvable = true;

  void validate() const {
    require(!task_id.empty(), "TaskSpec: task_id must not be empty");
    require(n_strategies >= 2, "TaskSpec: n_strategies must be >= 2");
    require(target_strategy >= 0 && target_strategy < n_strategies,
            "TaskSpec: target_strategy out of range");
    require(format_noise >= 0.0 && format_noise < 1.0,
            "TaskSpec: format_noise must be in [0,1)");
    require(length_base > 0.0, "TaskSpec: length_base must be > 0");
    require(length_spread > 0.0, "TaskSpec: length_spread must be > 0");
  }

  bool operator==(const TaskSpec&) const = default;
};

// Per-task logits over strategies plus a per-task verbosity scalar that
// scales sampled lengths through exp(verbosity).
struct PolicyState {
  std::vector<std::vector<double>> logits;
  std::vector<double> verbosity;
  int step = 0;

  static PolicyState initial(const std::vector<TaskSpec>& tasks) {
    PolicyState p;
    p.logits.reserve(tasks.size());
    for (const auto& t : tasks) {
      p.logits.emplace_back(static_cast<std::size_t>(t.n_strategies), 0.0);
    }
    p.verbosity.assign(tasks.size(), 0.0);
    return p;
  }

  bool operator==(const PolicyState&) const = default;
};

struct TrainerConfig {
  double learning_rate = 0.05;
  int group_size = 8;
  int steps = 40;
  double beta_kl = 0.02;
  double entropy_coeff = 0.0;
  std::optional<EntropySchedule> entropy_target_schedule;
  std::uint64_t seed = 1;

  void validate() const {
    require(learning_rate > 0.0, "TrainerConfig: learning_rate must be > 0");
    require(group_size >= 2, "TrainerConfig: group_size must be >= 2");
    require(steps >= 1, "TrainerConfig: steps must be >= 1");
    require(beta_kl >= 0.0, "TrainerConfig: beta_kl must be >= 0");
  }

  TrainerConfig with_overrides(const TrainerOverrides& o) const {
    TrainerConfig c = *this;
    if (o.beta_kl) c.beta_kl = *o.beta_kl;
    if (o.entropy_coeff) c.entropy_coeff = *o.entropy_coeff;
    if (o.entropy_target_schedule) c.entropy_target_schedule = o.entropy_target_schedule;
    return c;
  }

  bool operator==(const TrainerConfig&) const = default;
};

// Equal-length per-step series recorded by run_training.
struct TrajectorySummary {
  std::vector<double> reward_curve;
  std::vector<double> entropy_curve;
  std::vector<double> mean_length_curve;
  std::vector<double> all_fail_fraction_curve;
  std::vector<double> grad_norm_curve;

  std::size_t steps() const { return reward_curve.size(); }

  void validate() const {
    const std::size_t n = reward_curve.size();
    require(entropy_curve.size() == n && mean_length_curve.size() == n &&
                all_fail_fraction_curve.size() == n && grad_norm_curve.size() == n,
            "TrajectorySummary: curve lengths must match");
  }

  bool operator==(const TrajectorySummary&) const = default;
};

// Overall = 0.2 * (hard_a + hard_b) + 0.15 * (mid + easy_a + easy_b + easy_c).
inline double weighted_overall(const std::array<double, kNumBuckets>& s) {
  return 0.2 * (s[0] + s[1]) + 0.15 * (s[2] + s[3] + s[4] + s[5]);
}

inline double weighted_overall(const std::vector<double>& scores) {
  require(scores.size() == kNumBuckets, "weighted_overall: expected 6 scores");
  std::array<double, kNumBuckets> a{};
  std::copy(scores.begin(), scores.end(), a.begin());
  return weighted_overall(a);
}

struct MetricVector {
  std::array<double, kNumBuckets> scores{};  // each in [0,100]
  double mean_length = 0.0;
  double overall = 0.0;

  static MetricVector from_scores(const std::array<double, kNumBuckets>& s,
                                  double mean_length) {
    MetricVector m;
    m.scores = s;
    m.mean_length = mean_length;
    m.overall = weighted_overall(s);
    return m;
  }

  double score(Bucket b) const { return scores[static_cast<int>(b)]; }

  void validate() const {
    for (double s : scores) {
      require(s >= 0.0 && s <= 100.0, "MetricVector: bucket score out of [0,100]");
    }
    require(std::abs(overall - weighted_overall(scores)) <= 1e-9,
            "MetricVector: overall must equal the weighted combination");
  }

  bool operator==(const MetricVector&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const TaskSpec& t) {
  j = nlohmann::json{{"task_id", t.task_id},
                     {"bucket", to_string(t.bucket)},
                     {"n_strategies", t.n_strategies},
                     {"target_strategy", t.target_strategy},
                     {"format_noise", t.format_noise},
                     {"length_base", t.length_base},
                     {"length_spread", t.length_spread},
                     {"solvable", t.solvable}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& t) {
  t = TaskSpec{};
  t.task_id = j.at("task_id").get<std::string>();
  t.bucket = bucket_from_string(j.at("bucket").get<std::string>());
  t.n_strategies = j.at("n_strategies").get<int>();
  t.target_strategy = j.at("target_strategy").get<int>();
  t.format_noise = j.value("format_noise", 0.0);
  t.length_base = j.value("length_base", 200.0);
  t.length_spread = j.value("length_spread", 0.3);
  t.solvable = j.value("solvable", true);
  t.validate();
}

inline void to_json(nlohmann::json& j, const TrainerConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"group_size", c.group_size},
                     {"steps", c.steps},
                     {"beta_kl", c.beta_kl},
                     {"entropy_coeff", c.entropy_coeff},
                     {"seed", c.seed}};
  if (c.entropy_target_schedule) j["entropy_target_schedule"] = *c.entropy_target_schedule;
}

inline void from_json(const nlohmann::json& j, TrainerConfig& c) {
  c = TrainerConfig{};
  c.learning_rate = j.value("learning_rate", 0.05);
  c.group_size = j.value("group_size", 8);
  c.steps = j.value("steps", 40);
  c.beta_kl = j.value("beta_kl", 0.02);
  c.entropy_coeff = j.value("entropy_coeff", 0.0);
  c.seed = j.value("seed", static_cast<std::uint64_t>(1));
  if (j.contains("entropy_target_schedule")) {
    c.entropy_target_schedule = j.at("entropy_target_schedule").get<EntropySchedule>();
  }
  c.validate();
}

inline void to_json(nlohmann::json& j, const TrajectorySummary& t) {
  j = nlohmann::json{{"reward_curve", t.reward_curve},
                     {"entropy_curve", t.entropy_curve},
                     {"mean_length_curve", t.mean_length_curve},
                     {"all_fail_fraction_curve", t.all_fail_fraction_curve},
                     {"grad_norm_curve", t.grad_norm_curve}};
}

inline void from_json(const nlohmann::json& j, TrajectorySummary& t) {
  t.reward_curve = j.at("reward_curve").get<std::vector<double>>();
  t.entropy_curve = j.at("entropy_curve").get<std::vector<double>>();
  t.mean_length_curve = j.at("mean_length_curve").get<std::vector<double>>();
  t.all_fail_fraction_curve = j.at("all_fail_fraction_curve").get<std::vector<double>>();
  t.grad_norm_curve = j.at("grad_norm_curve").get<std::vector<double>>();
  t.validate();
}

inline void to_json(nlohmann::json& j, const MetricVector& m) {
  j = nlohmann::json::object();
  for (int i = 0; i < kNumBuckets; ++i) j[bucket_names()[i]] = m.scores[i];
  j["mean_length"] = m.mean_length;
  j["overall"] = m.overall;
}

inline void from_json(const nlohmann::json& j, MetricVector& m) {
  for (int i = 0; i < kNumBuckets; ++i) m.scores[i] = j.at(bucket_names()[i]).get<double>();
  m.mean_length = j.at("mean_length").get<double>();
  m.overall = j.at("overall").get<double>();
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline int sample_length(const TaskSpec& task, double verbosity, Rng& rng) {
  const double mu = std::log(task.length_base) + verbosity;
  const double x = std::exp(mu + task.length_spread * rng.normal());
  const double clamped = clamp(std::floor(x + 0.5), 1.0, static_cast<double>(kMaxLength));
  return static_cast<int>(clamped);
}

}  // namespace detail

// Draws G rollouts for one task: strategy from the softmax of the task's
// logits, validity with probability 1 - format_noise, reward_correct = 1 iff
// the target strategy is hit on a valid, solvable task. Format shaping is
// unused here (reward_format = 0), so total rewards are the correctness
// rewards.
inline RewardGroup sample_group(const TaskSpec& task, const PolicyState& policy,
                                std::size_t task_index, int group_size, Rng& rng) {
  task.validate();
  require(task_index < policy.logits.size(), "sample_group: task index out of range");
  require(group_size >= 2, "sample_group: group_size must be >= 2");
  const std::vector<double> probs = softmax(policy.logits[task_index]);
  const double policy_entropy = categorical_entropy(probs);

  RewardGroup group;
  group.prompt_id = task.task_id;
  group.samples.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) {
    const int strategy = sample_categorical(probs, rng);
    const bool valid = rng.uniform() >= task.format_noise;
    const bool hit = task.solvable && valid && strategy == task.target_strategy;
    const int length = detail::sample_length(task, policy.verbosity[task_index], rng);
    const double entropy = std::max(0.0, policy_entropy + rng.uniform(-0.1, 0.1));
    group.samples.push_back(
        make_sample(hit ? 1.0 : 0.0, 0.0, valid, length, entropy, strategy));
  }
  return group;
}

// ---------------------------------------------------------------------------
// Policy-gradient update
// ---------------------------------------------------------------------------

struct UpdateStats {
  double grad_norm_sq = 0.0;
};

namespace detail {

// d/dz of the categorical entropy H(softmax(z)).
inline std::vector<double> entropy_gradient(const std::vector<double>& p, double h) {
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) g[i] = -p[i] * (std::log(p[i]) + h);
  }
  return g;
}

// d/dz of KL(softmax(z) || q); zero at p == q.
inline std::vector<double> kl_gradient(const std::vector<double>& p,
                                       const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] > 0.0) g[i] = p[i] * (std::log(p[i] / q[i]) - kl);
  }
  return g;
}

}  // namespace detail

// One REINFORCE step on a single task: logits move along
// sum_i A_i * grad log pi(a_i), minus the KL pull toward the anchor policy,
// plus the entropy bonus; verbosity moves along the advantage-weighted
// length-model score, which couples to length exactly when the estimator
// shapes advantages by length.
inline UpdateStats policy_gradient_update(PolicyState& policy, const TaskSpec& task,
                                          std::size_t task_index,
                                          const RewardGroup& group,
                                          const AdvantageVector& advantages,
                                          const TrainerConfig& cfg,
                                          const std::vector<double>& anchor_logits,
                                          double entropy_coeff_now) {
  require(advantages.values.size() == group.samples.size(),
          "policy_gradient_update: advantages not aligned with group");
  std::vector<double>& z = policy.logits[task_index];
  const std::vector<double> p = softmax(z);
  const double h = categorical_entropy(p);

  std::vector<double> grad(z.size(), 0.0);
  for (std::size_t i = 0; i < group.samples.size(); ++i) {
    const double a = advantages.values[i];
    if (a == 0.0) continue;
    const int action = group.samples[i].strategy;
    require(action >= 0 && action < static_cast<int>(z.size()),
            "policy_gradient_update: sample carries no strategy index");
    for (std::size_t k = 0; k < z.size(); ++k) {
      grad[k] += a * ((static_cast<int>(k) == action ? 1.0 : 0.0) - p[k]);
    }
  }

  if (cfg.beta_kl > 0.0) {
    const std::vector<double> q = softmax(anchor_logits);
    const std::vector<double> klg = detail::kl_gradient(p, q);
    for (std::size_t k = 0; k < z.size(); ++k) grad[k] -= cfg.beta_kl * klg[k];
  }
  if (entropy_coeff_now != 0.0) {
    const std::vector<double> eg = detail::entropy_gradient(p, h);
    for (std::size_t k = 0; k < z.size(); ++k) grad[k] += entropy_coeff_now * eg[k];
  }

  // Length channel: REINFORCE through the log-normal length model.
  const double mu_len = std::log(task.length_base) + policy.verbosity[task_index];
  const double s2 = task.length_spread * task.length_spread;
  double vgrad = 0.0;
  for (std::size_t i = 0; i < group.samples.size(); ++i) {
    const double a = advantages.values[i];
    if (a == 0.0) continue;
    vgrad += a * (std::log(static_cast<double>(group.samples[i].length)) - mu_len) / s2;
  }

  double norm_sq = vgrad * vgrad;
  for (double g : grad) norm_sq += g * g;
  if (!std::isfinite(norm_sq)) {
    nlohmann::json dump{{"task", task.task_id},
                        {"group", group},
                        {"advantages", advantages}};
    throw PoiseError("policy_gradient_update: non-finite gradient: " + dump.dump());
  }

  for (std::size_t k = 0; k < z.size(); ++k) z[k] += cfg.learning_rate * grad[k];
  policy.verbosity[task_index] =
      clamp(policy.verbosity[task_index] + cfg.learning_rate * vgrad, -3.0, 3.0);

  UpdateStats st;
  st.grad_norm_sq = norm_sq;
  return st;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainingResult {
  TrajectorySummary trajectory;
  PolicyState policy;
};

// Fixed-step, fixed-seed protocol: each step draws one group per task,
// estimates advantages over the whole step batch, and applies one update per
// task. Deterministic given (genome, tasks, cfg.seed).
inline TrainingResult run_training(const Genome& genome,
                                   const std::vector<TaskSpec>& tasks,
                                   const TrainerConfig& base_cfg,
                                   const PolicyState* initial = nullptr) {
  require(!tasks.empty(), "run_training: no tasks");
  const TrainerConfig cfg = base_cfg.with_overrides(genome.trainer_overrides);
  cfg.validate();
  for (const auto& t : tasks) t.validate();

  PolicyState policy = initial ? *initial : PolicyState::initial(tasks);
  require(policy.logits.size() == tasks.size(), "run_training: policy/task mismatch");
  const PolicyState anchor = policy;

  Rng rng(cfg.seed);
  TrainingResult result;
  TrajectorySummary& traj = result.trajectory;

  // PI controller on the entropy-bonus coefficient when a target schedule is
  // configured; otherwise the fixed entropy_coeff applies.
  double entropy_coeff = cfg.entropy_coeff;
  double controller_integral = 0.0;
  constexpr double kControllerP = 20.0;
  constexpr double kControllerI = 2.0;
  constexpr double kControllerClamp = 100.0;

  for (int step = 0; step < cfg.steps; ++step) {
    // Measured entropy before the update drives the target controller.
    double mean_entropy = 0.0;
    for (const auto& z : policy.logits) mean_entropy += categorical_entropy(softmax(z));
    mean_entropy /= static_cast<double>(tasks.size());

    if (cfg.entropy_target_schedule) {
      const double err = cfg.entropy_target_schedule->target_at(step) - mean_entropy;
      controller_integral =
          clamp(controller_integral + kControllerI * err, -kControllerClamp, kControllerClamp);
      entropy_coeff = clamp(cfg.entropy_coeff + kControllerP * err + controller_integral,
                            -kControllerClamp, kControllerClamp);
    }

    std::vector<RewardGroup> batch;
    batch.reserve(tasks.size());
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      batch.push_back(sample_group(tasks[ti], policy, ti, cfg.group_size, rng));
    }

    std::vector<AdvantageVector> advantages;
    try {
      advantages = estimate_batch(batch, genome.estimator);
    } catch (const PoiseError& e) {
      nlohmann::json dump = batch;
      throw PoiseError(std::string("run_training: estimator failed: ") + e.what() +
                       " on batch " + dump.dump());
    }

    double grad_norm_sq = 0.0;
    double reward_sum = 0.0;
    double len_sum = 0.0;
    int all_fail = 0;
    std::size_t n_samples = 0;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      for (const auto& s : batch[ti].samples) {
        reward_sum += s.total_reward;
        len_sum += static_cast<double>(s.length);
        ++n_samples;
      }
      all_fail += batch[ti].all_fail() ? 1 : 0;
      require(all_finite(advantages[ti].values),
              "run_training: non-finite advantage from estimator on group " +
                  batch[ti].prompt_id);
      const UpdateStats st =
          policy_gradient_update(policy, tasks[ti], ti, batch[ti], advantages[ti], cfg,
                                 anchor.logits[ti], entropy_coeff);
      grad_norm_sq += st.grad_norm_sq;
    }
    policy.step = step + 1;

    traj.reward_curve.push_back(reward_sum / static_cast<double>(n_samples));
    traj.entropy_curve.push_back(mean_entropy);
    traj.mean_length_curve.push_back(len_sum / static_cast<double>(n_samples));
    traj.all_fail_fraction_curve.push_back(static_cast<double>(all_fail) /
                                           static_cast<double>(tasks.size()));
    traj.grad_norm_curve.push_back(std::sqrt(grad_norm_sq));
  }
  result.policy = policy;
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline int greedy_strategy(const std::vector<double>& logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);  // ties keep lowest index
  }
  return best;
}

inline double expected_length(const TaskSpec& task, double verbosity) {
  const double raw =
      task.length_base * std::exp(verbosity) * std::exp(0.5 * task.length_spread * task.length_spread);
  return clamp(raw, 1.0, static_cast<double>(kMaxLength));
}

}  // namespace detail

// Standardized evaluation: pass@32 buckets use the exact closed form
// 1 - (1 - p)^32 with p = P(target) * (1 - format_noise); greedy buckets use
// argmax accuracy with ties broken toward the lowest index.
inline MetricVector evaluate_policy(const PolicyState& policy,
                                    const std::vector<TaskSpec>& eval_tasks) {
  require(!eval_tasks.empty(), "evaluate_policy: no eval tasks");
  require(policy.logits.size() == eval_tasks.size(),
          "evaluate_policy: policy/task mismatch");

  std::array<double, kNumBuckets> sum{};
  std::array<int, kNumBuckets> count{};
  double len_sum = 0.0;
  for (std::size_t i = 0; i < eval_tasks.size(); ++i) {
    const TaskSpec& t = eval_tasks[i];
    t.validate();
    const int b = static_cast<int>(t.bucket);
    double task_score = 0.0;
    if (bucket_uses_pass_at_k(t.bucket)) {
      const std::vector<double> p = softmax(policy.logits[i]);
      const double p_task =
          t.solvable ? p[static_cast<std::size_t>(t.target_strategy)] * (1.0 - t.format_noise)
                     : 0.0;
      task_score = 1.0 - std::pow(1.0 - p_task, kPassAtK);
    } else {
      const int pick = detail::greedy_strategy(policy.logits[i]);
      task_score = (t.solvable && pick == t.target_strategy) ? 1.0 : 0.0;
    }
    sum[b] += task_score;
    count[b] += 1;
    len_sum += detail::expected_length(t, policy.verbosity[i]);
  }

  std::array<double, kNumBuckets> scores{};
  for (int b = 0; b < kNumBuckets; ++b) {
    scores[b] = count[b] > 0 ? 100.0 * sum[b] / count[b] : 0.0;
  }
  return MetricVector::from_scores(scores, len_sum / static_cast<double>(eval_tasks.size()));
}

// Maps a policy trained on `train_tasks` onto `eval_tasks`: each eval task
// borrows the trained logits of a train task with the same (bucket,
// n_strategies) signature, round-robin within matches; unmatched eval tasks
// get a fresh uniform policy.
inline PolicyState map_policy_to_tasks(const PolicyState& trained,
                                       const std::vector<TaskSpec>& train_tasks,
                                       const std::vector<TaskSpec>& eval_tasks) {
  require(trained.logits.size() == train_tasks.size(),
          "map_policy_to_tasks: policy/train task mismatch");
  PolicyState out;
  out.step = trained.step;
  std::map<std::pair<int, int>, std::size_t> cursor;
  for (const auto& et : eval_tasks) {
    std::vector<std::size_t> matches;
    for (std::size_t i = 0; i < train_tasks.size(); ++i) {
      if (train_tasks[i].bucket == et.bucket &&
          train_tasks[i].n_strategies == et.n_strategies) {
        matches.push_back(i);
      }
    }
    if (matches.empty()) {
      out.logits.emplace_back(static_cast<std::size_t>(et.n_strategies), 0.0);
      out.verbosity.push_back(0.0);
    } else {
      const auto key = std::make_pair(static_cast<int>(et.bucket), et.n_strategies);
      const std::size_t pick = matches[cursor[key]++ % matches.size()];
      out.logits.push_back(trained.logits[pick]);
      out.verbosity.push_back(trained.verbosity[pick]);
    }
  }
  return out;
}

// Monte Carlo cross-check of the pass@32 closed form: draws `trials`
// independent 32-sample attempts per task.
inline double mc_pass_rate(const TaskSpec& task, const PolicyState& policy,
                           std::size_t task_index, int trials, Rng& rng) {
  const std::vector<double> p = softmax(policy.logits[task_index]);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    bool solved = false;
    for (int k = 0; k < kPassAtK; ++k) {
      const int strat = sample_categorical(p, rng);
      const bool valid = rng.uniform() >= task.format_noise;
      if (task.solvable && valid && strat == task.target_strategy) solved = true;
    }
    hits += solved ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace poise

#endif  // POISE_ENV_HPP_
