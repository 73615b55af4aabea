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
// Group-relative advantage estimators. Every estimator is a pure function
// from one reward group (or a batch of groups) to an index-aligned advantage
// vector; all statistics are population (1/G) moments.

#ifndef POISE_ESTIMATORS_HPP_
#define POISE_ESTIMATORS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/common.hpp"

namespace poise {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// One rollout. `strategy` records the sampled action for the policy update;
// estimators never read it.
struct SampleRecord {
  double reward_correct = 0.0;  // in [0,1], 1 = verified correct
  double reward_format = 0.0;   // shaped format component, 0 if unused
  bool valid = true;            // format-valid flag
  int length = 1;               // tokens, >= 1
  double token_entropy = 0.0;   // mean nats per token, >= 0
  double total_reward = 0.0;    // reward_correct + reward_format
  int strategy = -1;

  void validate() const {
    require(length >= 1, "SampleRecord: length must be >= 1");
    require(token_entropy >= 0.0, "SampleRecord: token_entropy must be >= 0");
    require(reward_correct >= 0.0 && reward_correct <= 1.0,
            "SampleRecord: reward_correct must be in [0,1]");
    require(valid || reward_correct == 0.0,
            "SampleRecord: invalid sample cannot carry a correctness reward");
    require(std::abs(total_reward - (reward_correct + reward_format)) <= 1e-12,
            "SampleRecord: total_reward must equal reward_correct + reward_format");
  }

  bool correct() const { return reward_correct > 0.5; }

  bool operator==(const SampleRecord&) const = default;
};

inline SampleRecord make_sample(double reward_correct, double reward_format,
                                bool valid, int length, double token_entropy,
                                int strategy = -1) {
  SampleRecord s;
  s.reward_correct = reward_correct;
  s.reward_format = reward_format;
  s.valid = valid;
  s.length = length;
  s.token_entropy = token_entropy;
  s.total_reward = reward_correct + reward_format;
  s.strategy = strategy;
  return s;
}

// G rollouts sharing one prompt. Sample order is stable; advantage output is
// index-aligned with `samples`.
struct RewardGroup {
  std::string prompt_id;
  std::vector<SampleRecord> samples;

  void validate() const {
    require(samples.size() >= 2, "RewardGroup: needs at least 2 samples");
    for (const auto& s : samples) s.validate();
  }

  std::size_t size() const { return samples.size(); }

  std::vector<double> total_rewards() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.total_reward);
    return out;
  }

  std::vector<double> correctness_rewards() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.reward_correct);
    return out;
  }

  bool all_fail() const {
    for (const auto& s : samples) {
      if (s.correct()) return false;
    }
    return true;
  }

  bool operator==(const RewardGroup&) const = default;
};

enum class Algorithm {
  grpo,
  bn,
  av,
  vm_av,
  msa,
  fa,
  dfr,
  sa,
  dace,
  cag,
  dcbe,
};

inline const std::vector<std::pair<Algorithm, std::string>>& algorithm_names() {
  static const std::vector<std::pair<Algorithm, std::string>> kNames = {
      {Algorithm::grpo, "grpo"}, {Algorithm::bn, "bn"},
      {Algorithm::av, "av"},     {Algorithm::vm_av, "vm_av"},
      {Algorithm::msa, "msa"},   {Algorithm::fa, "fa"},
      {Algorithm::dfr, "dfr"},   {Algorithm::sa, "sa"},
      {Algorithm::dace, "dace"}, {Algorithm::cag, "cag"},
      {Algorithm::dcbe, "dcbe"},
  };
  return kNames;
}

inline std::string to_string(Algorithm a) {
  for (const auto& [alg, name] : algorithm_names()) {
    if (alg == a) return name;
  }
  throw PoiseError("unknown algorithm enum value");
}

inline Algorithm algorithm_from_string(const std::string& name) {
  for (const auto& [alg, n] : algorithm_names()) {
    if (n == name) return alg;
  }
  throw PoiseError("unknown estimator name: " + name);
}

// Full parameter set shared by all estimators; each algorithm reads the
// slice it needs. Defaults keep outputs on a bounded scale for binary
// rewards.
struct EstimatorConfig {
  Algorithm algorithm = Algorithm::grpo;
  double epsilon = 1e-6;
  double sigma_min = 0.1;
  double sigma_floor = 0.1;
  double clip_lo = -3.0;
  double clip_hi = 3.0;
  double alpha_bayes = 1.0;
  double beta_bayes = 1.0;
  double a_floor = -2.0;
  double alpha_uniform = 0.3;
  double lambda_len = 0.5;
  double lambda_fmt = 0.5;
  double alpha_anchor = 0.5;
  double sigma_fixed = 0.5;
  double alpha_diff_weight = 1.0;
  double beta_eff = 0.5;
  double beta_base = 0.5;
  double lambda_rli = 0.5;

  void validate() const {
    require(clip_lo < clip_hi, "EstimatorConfig: clip_lo must be < clip_hi");
    require(epsilon >= 0.0, "EstimatorConfig: epsilon must be >= 0");
    require(sigma_min > 0.0, "EstimatorConfig: sigma_min must be > 0");
    require(sigma_floor > 0.0, "EstimatorConfig: sigma_floor must be > 0");
  }

  bool operator==(const EstimatorConfig&) const = default;
};

// Index-aligned advantages plus named scalar diagnostics.
struct AdvantageVector {
  std::vector<double> values;
  std::map<std::string, double> diagnostics;

  bool operator==(const AdvantageVector&) const = default;
};

// ---------------------------------------------------------------------------
// JSON (the estimator section of the genome schema)
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const EstimatorConfig& c) {
  j = nlohmann::json{{"algorithm", to_string(c.algorithm)},
                     {"epsilon", c.epsilon},
                     {"sigma_min", c.sigma_min},
                     {"sigma_floor", c.sigma_floor},
                     {"clip_lo", c.clip_lo},
                     {"clip_hi", c.clip_hi},
                     {"alpha_bayes", c.alpha_bayes},
                     {"beta_bayes", c.beta_bayes},
                     {"a_floor", c.a_floor},
                     {"alpha_uniform", c.alpha_uniform},
                     {"lambda_len", c.lambda_len},
                     {"lambda_fmt", c.lambda_fmt},
                     {"alpha_anchor", c.alpha_anchor},
                     {"sigma_fixed", c.sigma_fixed},
                     {"alpha_diff_weight", c.alpha_diff_weight},
                     {"beta_eff", c.beta_eff},
                     {"beta_base", c.beta_base},
                     {"lambda_rli", c.lambda_rli}};
}

inline void from_json(const nlohmann::json& j, EstimatorConfig& c) {
  c = EstimatorConfig{};
  c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  auto get = [&j](const char* key, double& into) {
    if (j.contains(key)) into = j.at(key).get<double>();
  };
  get("epsilon", c.epsilon);
  get("sigma_min", c.sigma_min);
  get("sigma_floor", c.sigma_floor);
  get("clip_lo", c.clip_lo);
  get("clip_hi", c.clip_hi);
  get("alpha_bayes", c.alpha_bayes);
  get("beta_bayes", c.beta_bayes);
  get("a_floor", c.a_floor);
  get("alpha_uniform", c.alpha_uniform);
  get("lambda_len", c.lambda_len);
  get("lambda_fmt", c.lambda_fmt);
  get("alpha_anchor", c.alpha_anchor);
  get("sigma_fixed", c.sigma_fixed);
  get("alpha_diff_weight", c.alpha_diff_weight);
  get("beta_eff", c.beta_eff);
  get("beta_base", c.beta_base);
  get("lambda_rli", c.lambda_rli);
}

inline void to_json(nlohmann::json& j, const SampleRecord& s) {
  j = nlohmann::json{{"reward_correct", s.reward_correct},
                     {"reward_format", s.reward_format},
                     {"valid", s.valid},
                     {"length", s.length},
                     {"token_entropy", s.token_entropy},
                     {"total_reward", s.total_reward},
                     {"strategy", s.strategy}};
}

inline void from_json(const nlohmann::json& j, SampleRecord& s) {
  s = SampleRecord{};
  s.reward_correct = j.at("reward_correct").get<double>();
  s.reward_format = j.value("reward_format", 0.0);
  s.valid = j.value("valid", true);
  s.length = j.value("length", 1);
  s.token_entropy = j.value("token_entropy", 0.0);
  s.total_reward = j.contains("total_reward")
                       ? j.at("total_reward").get<double>()
                       : s.reward_correct + s.reward_format;
  s.strategy = j.value("strategy", -1);
}

inline void to_json(nlohmann::json& j, const RewardGroup& g) {
  j = nlohmann::json{{"prompt_id", g.prompt_id}, {"samples", g.samples}};
}

inline void from_json(const nlohmann::json& j, RewardGroup& g) {
  g.prompt_id = j.value("prompt_id", "");
  g.samples = j.at("samples").get<std::vector<SampleRecord>>();
}

inline void to_json(nlohmann::json& j, const AdvantageVector& a) {
  j = nlohmann::json{{"values", a.values}, {"diagnostics", a.diagnostics}};
}

inline void from_json(const nlohmann::json& j, AdvantageVector& a) {
  a.values = j.at("values").get<std::vector<double>>();
  a.diagnostics = j.value("diagnostics", std::map<std::string, double>{});
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

namespace detail {

inline void check_group(const RewardGroup& group, const char* op) {
  require(!group.samples.empty(), std::string(op) + ": empty group");
  require(group.samples.size() >= 2, std::string(op) + ": group size must be >= 2");
}

inline double group_pass_rate(const RewardGroup& group) {
  int n = 0;
  for (const auto& s : group.samples) n += s.correct() ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(group.size());
}

// Mean length over the correct subset; nullopt when no sample is correct.
inline std::optional<double> correct_mean_length(const RewardGroup& group) {
  double acc = 0.0;
  int n = 0;
  for (const auto& s : group.samples) {
    if (s.correct()) {
      acc += static_cast<double>(s.length);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

}  // namespace detail

// A_i = (R_i - mu_g) / sqrt(popvar + eps) on total rewards.
inline AdvantageVector grpo_advantage(const RewardGroup& group,
                                      const EstimatorConfig& cfg) {
  detail::check_group(group, "grpo_advantage");
  const std::vector<double> r = group.total_rewards();
  const double mu = mean(r);
  const double sigma = std::sqrt(pop_variance(r) + cfg.epsilon);
  AdvantageVector out;
  out.values.assign(r.size(), 0.0);
  if (sigma > 0.0) {
    for (std::size_t i = 0; i < r.size(); ++i) out.values[i] = (r[i] - mu) / sigma;
  }
  out.diagnostics = {{"mu", mu}, {"sigma_used", sigma}};
  return out;
}

// Group-centered residuals scaled by one batch-wide RMS, then clipped.
inline std::vector<AdvantageVector> bn_advantage(
    const std::vector<RewardGroup>& batch, const EstimatorConfig& cfg) {
  require(!batch.empty(), "bn_advantage: empty batch");
  std::vector<std::vector<double>> residuals;
  residuals.reserve(batch.size());
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& g : batch) {
    detail::check_group(g, "bn_advantage");
    const std::vector<double> r = g.total_rewards();
    const double mu = mean(r);
    std::vector<double> res(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      res[i] = r[i] - mu;
      sq += res[i] * res[i];
    }
    n += r.size();
    residuals.push_back(std::move(res));
  }
  const double sigma_batch = std::sqrt(sq / static_cast<double>(n));
  const double denom = sigma_batch + cfg.epsilon;
  std::vector<AdvantageVector> out(batch.size());
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    out[gi].values.assign(residuals[gi].size(), 0.0);
    if (denom > 0.0) {
      for (std::size_t i = 0; i < residuals[gi].size(); ++i) {
        out[gi].values[i] = clamp(residuals[gi][i] / denom, cfg.clip_lo, cfg.clip_hi);
      }
    }
    out[gi].diagnostics = {{"sigma_batch", sigma_batch}};
  }
  return out;
}

// Analytic-variance scaling: sigma = sqrt(mu2 - mu^2), floored at sigma_min.
inline AdvantageVector av_advantage(const RewardGroup& group,
                                    const EstimatorConfig& cfg) {
  detail::check_group(group, "av_advantage");
  const std::vector<double> r = group.total_rewards();
  const double mu = mean(r);
  double mu2 = 0.0;
  for (double x : r) mu2 += x * x;
  mu2 /= static_cast<double>(r.size());
  const double sigma_analytic = std::sqrt(std::max(0.0, mu2 - mu * mu));
  const double denom = std::max(sigma_analytic, cfg.sigma_min);
  AdvantageVector out;
  out.values.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out.values[i] = (r[i] - mu) / denom;
  out.diagnostics = {{"mu", mu},
                     {"sigma_analytic", sigma_analytic},
                     {"sigma_used", denom}};
  return out;
}

// Validity masking with Bayesian-smoothed valid-subset statistics, a floor
// penalty for invalid samples, and length normalization applied by division
// to negative valid advantages. Statistics run on correctness rewards so the
// Bernoulli form sigma = sqrt(mu(1-mu)) is well defined.
inline AdvantageVector vm_av_advantage(const RewardGroup& group,
                                       const EstimatorConfig& cfg) {
  detail::check_group(group, "vm_av_advantage");
  const std::size_t n = group.size();
  std::vector<std::size_t> valid_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (group.samples[i].valid) valid_idx.push_back(i);
  }
  AdvantageVector out;
  out.values.assign(n, cfg.a_floor);
  if (valid_idx.empty()) {
    out.diagnostics = {{"n_valid", 0.0}, {"all_invalid", 1.0}};
    return out;
  }

  double reward_sum = 0.0;
  double len_sum = 0.0;
  for (std::size_t i : valid_idx) {
    reward_sum += group.samples[i].reward_correct;
    len_sum += static_cast<double>(group.samples[i].length);
  }
  const double nv = static_cast<double>(valid_idx.size());
  const double mu_valid = (reward_sum + cfg.alpha_bayes) /
                          (nv + cfg.alpha_bayes + cfg.beta_bayes);
  const double sigma_valid = std::sqrt(std::max(0.0, mu_valid * (1.0 - mu_valid)));
  const double denom = std::max(sigma_valid, cfg.sigma_floor);
  const double mean_len_valid = len_sum / nv;

  for (std::size_t i : valid_idx) {
    double a = (group.samples[i].reward_correct - mu_valid) / denom;
    if (a < 0.0) {
      const double l_rel =
          clamp(static_cast<double>(group.samples[i].length) / mean_len_valid, 0.5, 2.0);
      a /= l_rel;
    }
    out.values[i] = a;
  }
  out.diagnostics = {{"mu_valid", mu_valid},
                     {"sigma_used", denom},
                     {"n_valid", nv},
                     {"all_invalid", 0.0},
                     {"mean_len_valid", mean_len_valid}};
  return out;
}

// Regime-aware anchor: mixed groups scale total-reward residuals by the
// outcome spread at weight 1.0, uniform groups by the total spread at
// alpha_uniform; length enters multiplicatively as ratio^(+/-lambda).
inline AdvantageVector msa_advantage(const RewardGroup& group,
                                     const EstimatorConfig& cfg) {
  detail::check_group(group, "msa_advantage");
  const std::vector<double> total = group.total_rewards();
  const std::vector<double> outcome = group.correctness_rewards();
  const double sigma_outcome = pop_stddev(outcome);
  const double sigma_total = pop_stddev(total);
  const bool mixed = sigma_outcome > cfg.epsilon;
  const double sigma_anchor = mixed ? sigma_outcome : sigma_total;
  const double scale = mixed ? 1.0 : cfg.alpha_uniform;
  const double mu_total = mean(total);

  double len_sum = 0.0;
  for (const auto& s : group.samples) len_sum += static_cast<double>(s.length);
  const double mean_len = len_sum / static_cast<double>(group.size());

  AdvantageVector out;
  out.values.assign(group.size(), 0.0);
  if (sigma_anchor > cfg.epsilon && sigma_anchor > 0.0) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      double a = (total[i] - mu_total) / sigma_anchor * scale;
      const double ratio = static_cast<double>(group.samples[i].length) / mean_len;
      if (a > 0.0) {
        a *= std::pow(ratio, cfg.lambda_len);
      } else if (a < 0.0) {
        a *= std::pow(ratio, -cfg.lambda_len);
      }
      out.values[i] = a;
    }
  }
  out.diagnostics = {{"regime_uniform", mixed ? 0.0 : 1.0},
                     {"sigma_used", sigma_anchor},
                     {"scale", scale}};
  return out;
}

// Two regimes keyed on the max correctness reward: clipped z-scores when any
// sample succeeded, fixed constants (-2.0 invalid / -0.5 valid-but-wrong)
// in all-fail groups.
inline AdvantageVector fa_advantage(const RewardGroup& group,
                                    const EstimatorConfig& cfg) {
  detail::check_group(group, "fa_advantage");
  double r_max = 0.0;
  for (const auto& s : group.samples) r_max = std::max(r_max, s.reward_correct);

  AdvantageVector out;
  out.values.assign(group.size(), 0.0);
  if (r_max > 0.0) {
    const std::vector<double> r = group.total_rewards();
    const double mu = mean(r);
    const double denom = pop_stddev(r) + cfg.epsilon;
    if (denom > 0.0) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        out.values[i] = clamp((r[i] - mu) / denom, cfg.clip_lo, cfg.clip_hi);
      }
    }
    out.diagnostics = {{"regime_all_fail", 0.0}, {"sigma_used", denom}};
  } else {
    for (std::size_t i = 0; i < group.size(); ++i) {
      out.values[i] = group.samples[i].valid ? -0.5 : -2.0;
    }
    out.diagnostics = {{"regime_all_fail", 1.0}};
  }
  return out;
}

// Decoupled format and reasoning streams: A = A_reason + lambda_fmt * A_fmt.
// The format stream is the z-score of the validity indicator; the reasoning
// stream is the correctness z-score in mixed groups and the token-entropy
// z-score in all-fail groups (higher entropy, higher advantage).
inline AdvantageVector dfr_advantage(const RewardGroup& group,
                                     const EstimatorConfig& cfg) {
  detail::check_group(group, "dfr_advantage");
  std::vector<double> fmt(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    fmt[i] = group.samples[i].valid ? 1.0 : 0.0;
  }
  const std::vector<double> a_fmt = zscores(fmt, cfg.epsilon);

  std::vector<double> a_reason;
  const bool all_fail = group.all_fail();
  if (!all_fail) {
    a_reason = zscores(group.correctness_rewards(), cfg.epsilon);
  } else {
    std::vector<double> ent(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      ent[i] = group.samples[i].token_entropy;
    }
    a_reason = zscores(ent, cfg.epsilon);
  }

  AdvantageVector out;
  out.values.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    out.values[i] = a_reason[i] + cfg.lambda_fmt * a_fmt[i];
  }
  out.diagnostics = {{"regime_all_fail", all_fail ? 1.0 : 0.0}};
  return out;
}

// Dual-anchor baseline (group/batch mean blend) with a fixed scale.
inline std::vector<AdvantageVector> sa_advantage(
    const std::vector<RewardGroup>& batch, const EstimatorConfig& cfg) {
  require(!batch.empty(), "sa_advantage: empty batch");
  double batch_sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : batch) {
    detail::check_group(g, "sa_advantage");
    for (const auto& s : g.samples) batch_sum += s.total_reward;
    n += g.size();
  }
  const double mu_batch = batch_sum / static_cast<double>(n);

  std::vector<AdvantageVector> out(batch.size());
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    const std::vector<double> r = batch[gi].total_rewards();
    const double mu_group = mean(r);
    const double mu_anchor =
        cfg.alpha_anchor * mu_group + (1.0 - cfg.alpha_anchor) * mu_batch;
    out[gi].values.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      out[gi].values[i] = (r[i] - mu_anchor) / cfg.sigma_fixed;
    }
    out[gi].diagnostics = {{"mu_group", mu_group},
                           {"mu_batch", mu_batch},
                           {"mu_anchor", mu_anchor},
                           {"sigma_used", cfg.sigma_fixed}};
  }
  return out;
}

// Difficulty-aware reweighting by group pass rate; efficiency from z-scored
// negative lengths within the correct subset, gated on correctness.
inline AdvantageVector dace_advantage(const RewardGroup& group,
                                      const EstimatorConfig& cfg) {
  detail::check_group(group, "dace_advantage");
  const double pass_rate = detail::group_pass_rate(group);
  const double acc_multiplier = 1.0 + cfg.alpha_diff_weight * (1.0 - pass_rate);

  const std::vector<double> outcome = group.correctness_rewards();
  const double mu = mean(outcome);
  const double sigma = std::sqrt(pop_variance(outcome) + cfg.epsilon);

  // Efficiency z-scores over the correct subset only.
  std::vector<std::size_t> correct_idx;
  std::vector<double> neg_len;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group.samples[i].correct()) {
      correct_idx.push_back(i);
      neg_len.push_back(-static_cast<double>(group.samples[i].length));
    }
  }
  std::vector<double> eff(group.size(), 0.0);
  if (correct_idx.size() >= 2) {
    const std::vector<double> z = zscores(neg_len, cfg.epsilon);
    for (std::size_t k = 0; k < correct_idx.size(); ++k) eff[correct_idx[k]] = z[k];
  }

  AdvantageVector out;
  out.values.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a_acc = sigma > 0.0 ? (outcome[i] - mu) / sigma : 0.0;
    const double gate = group.samples[i].correct() ? 1.0 : 0.0;
    out.values[i] =
        a_acc * acc_multiplier + cfg.beta_eff * eff[i] * pass_rate * gate;
  }
  out.diagnostics = {{"pass_rate", pass_rate},
                     {"acc_multiplier", acc_multiplier},
                     {"n_correct", static_cast<double>(correct_idx.size())}};
  return out;
}

// Penalty-only efficiency cost gated by success rate squared.
inline AdvantageVector cag_advantage(const RewardGroup& group,
                                     const EstimatorConfig& cfg) {
  detail::check_group(group, "cag_advantage");
  const double sr = detail::group_pass_rate(group);
  const double beta = cfg.beta_base * sr * sr;
  const std::optional<double> mu_len = detail::correct_mean_length(group);

  const std::vector<double> outcome = group.correctness_rewards();
  const double mu = mean(outcome);
  const double sigma = std::sqrt(pop_variance(outcome) + cfg.epsilon);

  AdvantageVector out;
  out.values.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a_acc = sigma > 0.0 ? (outcome[i] - mu) / sigma : 0.0;
    double a_eff = 0.0;
    if (group.samples[i].correct() && mu_len && *mu_len > 0.0) {
      a_eff = std::min((*mu_len - static_cast<double>(group.samples[i].length)) / *mu_len, 0.0);
    }
    out.values[i] = a_acc + beta * a_eff;
  }
  out.diagnostics = {{"success_rate", sr},
                     {"beta", beta},
                     {"mu_len_correct", mu_len.value_or(0.0)}};
  return out;
}

// Relative-length-improvement efficiency with squared-pass-rate gating.
inline AdvantageVector dcbe_advantage(const RewardGroup& group,
                                      const EstimatorConfig& cfg) {
  detail::check_group(group, "dcbe_advantage");
  const double pass_rate = detail::group_pass_rate(group);
  const double alpha_diff = pass_rate * pass_rate;
  const std::optional<double> mu_len = detail::correct_mean_length(group);

  const std::vector<double> outcome = group.correctness_rewards();
  const double mu = mean(outcome);
  const double sigma = std::sqrt(pop_variance(outcome) + cfg.epsilon);

  AdvantageVector out;
  out.values.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a_acc = sigma > 0.0 ? (outcome[i] - mu) / sigma : 0.0;
    double add = 0.0;
    if (group.samples[i].correct() && mu_len) {
      const double rli =
          (*mu_len - static_cast<double>(group.samples[i].length)) / (*mu_len + cfg.epsilon);
      add = cfg.lambda_rli * alpha_diff * rli;
    }
    out.values[i] = a_acc + add;
  }
  out.diagnostics = {{"pass_rate", pass_rate},
                     {"alpha_diff", alpha_diff},
                     {"mu_len_correct", mu_len.value_or(0.0)}};
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline bool is_batch_algorithm(Algorithm a) {
  return a == Algorithm::bn || a == Algorithm::sa;
}

// Applies the configured estimator to a whole batch of groups; per-group
// algorithms map over the batch, bn/sa consume it jointly.
inline std::vector<AdvantageVector> estimate_batch(
    const std::vector<RewardGroup>& batch, const EstimatorConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::bn:
      return bn_advantage(batch, cfg);
    case Algorithm::sa:
      return sa_advantage(batch, cfg);
    default:
      break;
  }
  std::vector<AdvantageVector> out;
  out.reserve(batch.size());
  for (const auto& g : batch) {
    switch (cfg.algorithm) {
      case Algorithm::grpo: out.push_back(grpo_advantage(g, cfg)); break;
      case Algorithm::av: out.push_back(av_advantage(g, cfg)); break;
      case Algorithm::vm_av: out.push_back(vm_av_advantage(g, cfg)); break;
      case Algorithm::msa: out.push_back(msa_advantage(g, cfg)); break;
      case Algorithm::fa: out.push_back(fa_advantage(g, cfg)); break;
      case Algorithm::dfr: out.push_back(dfr_advantage(g, cfg)); break;
      case Algorithm::dace: out.push_back(dace_advantage(g, cfg)); break;
      case Algorithm::cag: out.push_back(cag_advantage(g, cfg)); break;
      case Algorithm::dcbe: out.push_back(dcbe_advantage(g, cfg)); break;
      default:
        throw PoiseError("estimate_batch: unhandled algorithm");
    }
  }
  return out;
}

}  // namespace poise

#endif  // POISE_ESTIMATORS_HPP_
