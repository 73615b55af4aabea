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
// Genome: the structured configuration that fully specifies one candidate
// algorithm (estimator choice + parameters + trainer overrides).

#ifndef POISE_GENOME_HPP_
#define POISE_GENOME_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/estimators.hpp"

namespace poise {

// Optional annealed entropy target (H_hi -> H_lo over anneal_steps).
struct EntropySchedule {
  double h_hi = 1.5;
  double h_lo = 0.5;
  int anneal_steps = 20;

  double target_at(int step) const {
    if (anneal_steps <= 0) return h_lo;
    const double t = std::min(1.0, static_cast<double>(step) / anneal_steps);
    return h_hi + (h_lo - h_hi) * t;
  }

  bool operator==(const EntropySchedule&) const = default;
};

// Subset of trainer knobs a genome may override.
struct TrainerOverrides {
  std::optional<double> beta_kl;
  std::optional<double> entropy_coeff;
  std::optional<EntropySchedule> entropy_target_schedule;

  bool operator==(const TrainerOverrides&) const = default;
};

struct Genome {
  EstimatorConfig estimator;
  TrainerOverrides trainer_overrides;
  std::string descriptor;

  bool operator==(const Genome&) const = default;
};

// ---------------------------------------------------------------------------
// Declared parameter ranges. `lo`/`hi` bound what the schema accepts,
// `mutation_lo` is the floor used when sampling new values (kept away from
// degenerate points like sigma_fixed = 0, which the schema still admits so
// the smoke verification stage has real failures to catch).
// ---------------------------------------------------------------------------

struct FieldRange {
  const char* name;
  double lo;
  double hi;
  double mutation_lo;
  double EstimatorConfig::*member;  // nullptr for trainer-level fields
};

inline const std::vector<FieldRange>& estimator_field_ranges() {
  static const std::vector<FieldRange> kRanges = {
      {"epsilon", 1e-9, 1e-2, 1e-9, &EstimatorConfig::epsilon},
      {"sigma_min", 1e-3, 2.0, 1e-3, &EstimatorConfig::sigma_min},
      {"sigma_floor", 1e-3, 2.0, 1e-3, &EstimatorConfig::sigma_floor},
      {"clip_lo", -10.0, -0.5, -10.0, &EstimatorConfig::clip_lo},
      {"clip_hi", 0.5, 10.0, 0.5, &EstimatorConfig::clip_hi},
      {"alpha_bayes", 0.0, 10.0, 0.0, &EstimatorConfig::alpha_bayes},
      {"beta_bayes", 0.0, 10.0, 0.0, &EstimatorConfig::beta_bayes},
      {"a_floor", -5.0, 0.0, -5.0, &EstimatorConfig::a_floor},
      {"alpha_uniform", 0.05, 1.0, 0.05, &EstimatorConfig::alpha_uniform},
      {"lambda_len", 0.0, 2.0, 0.0, &EstimatorConfig::lambda_len},
      {"lambda_fmt", 0.0, 2.0, 0.0, &EstimatorConfig::lambda_fmt},
      {"alpha_anchor", 0.0, 1.0, 0.0, &EstimatorConfig::alpha_anchor},
      {"sigma_fixed", 0.0, 5.0, 1e-3, &EstimatorConfig::sigma_fixed},
      {"alpha_diff_weight", 0.0, 4.0, 0.0, &EstimatorConfig::alpha_diff_weight},
      {"beta_eff", 0.0, 4.0, 0.0, &EstimatorConfig::beta_eff},
      {"beta_base", 0.0, 4.0, 0.0, &EstimatorConfig::beta_base},
      {"lambda_rli", 0.0, 4.0, 0.0, &EstimatorConfig::lambda_rli},
  };
  return kRanges;
}

struct TrainerFieldRange {
  const char* name;
  double lo;
  double hi;
};

inline const std::vector<TrainerFieldRange>& trainer_field_ranges() {
  static const std::vector<TrainerFieldRange> kRanges = {
      {"beta_kl", 0.0, 1.0},
      {"entropy_coeff", 0.0, 0.5},
  };
  return kRanges;
}

struct RangeViolation {
  std::string field;
  double value;
  double lo;
  double hi;
};

inline std::vector<RangeViolation> genome_range_violations(const Genome& g) {
  std::vector<RangeViolation> out;
  for (const auto& fr : estimator_field_ranges()) {
    const double v = g.estimator.*(fr.member);
    if (!(v >= fr.lo && v <= fr.hi) || !std::isfinite(v)) {
      out.push_back({fr.name, v, fr.lo, fr.hi});
    }
  }
  const auto& tr = trainer_field_ranges();
  if (g.trainer_overrides.beta_kl) {
    const double v = *g.trainer_overrides.beta_kl;
    if (!(v >= tr[0].lo && v <= tr[0].hi) || !std::isfinite(v)) {
      out.push_back({tr[0].name, v, tr[0].lo, tr[0].hi});
    }
  }
  if (g.trainer_overrides.entropy_coeff) {
    const double v = *g.trainer_overrides.entropy_coeff;
    if (!(v >= tr[1].lo && v <= tr[1].hi) || !std::isfinite(v)) {
      out.push_back({tr[1].name, v, tr[1].lo, tr[1].hi});
    }
  }
  return out;
}

// Structural validity: clip ordering and descriptor presence. Range
// conformance is reported separately so callers choose the policy.
inline void validate_genome_structure(const Genome& g) {
  require(!g.descriptor.empty(), "Genome: descriptor must not be empty");
  require(g.estimator.clip_lo < g.estimator.clip_hi,
          "Genome: clip_lo must be < clip_hi");
}

inline bool genome_is_valid(const Genome& g) {
  if (g.descriptor.empty()) return false;
  if (!(g.estimator.clip_lo < g.estimator.clip_hi)) return false;
  return genome_range_violations(g).empty();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const EntropySchedule& s) {
  j = nlohmann::json{{"h_hi", s.h_hi}, {"h_lo", s.h_lo}, {"anneal_steps", s.anneal_steps}};
}

inline void from_json(const nlohmann::json& j, EntropySchedule& s) {
  s.h_hi = j.at("h_hi").get<double>();
  s.h_lo = j.at("h_lo").get<double>();
  s.anneal_steps = j.at("anneal_steps").get<int>();
}

inline void to_json(nlohmann::json& j, const TrainerOverrides& t) {
  j = nlohmann::json::object();
  if (t.beta_kl) j["beta_kl"] = *t.beta_kl;
  if (t.entropy_coeff) j["entropy_coeff"] = *t.entropy_coeff;
  if (t.entropy_target_schedule) j["entropy_target_schedule"] = *t.entropy_target_schedule;
}

inline void from_json(const nlohmann::json& j, TrainerOverrides& t) {
  t = TrainerOverrides{};
  if (j.contains("beta_kl")) t.beta_kl = j.at("beta_kl").get<double>();
  if (j.contains("entropy_coeff")) t.entropy_coeff = j.at("entropy_coeff").get<double>();
  if (j.contains("entropy_target_schedule")) {
    t.entropy_target_schedule = j.at("entropy_target_schedule").get<EntropySchedule>();
  }
}

inline void to_json(nlohmann::json& j, const Genome& g) {
  j = nlohmann::json{{"descriptor", g.descriptor},
                     {"estimator", g.estimator},
                     {"trainer_overrides", g.trainer_overrides}};
}

inline void from_json(const nlohmann::json& j, Genome& g) {
  g.descriptor = j.at("descriptor").get<std::string>();
  g.estimator = j.at("estimator").get<EstimatorConfig>();
  g.trainer_overrides = j.value("trainer_overrides", TrainerOverrides{});
}

// Canonical identity of a genome's functional content: the descriptor is
// excluded so renamed duplicates still collide.
inline std::string genome_canonical_key(const Genome& g) {
  nlohmann::json j{{"estimator", g.estimator},
                   {"trainer_overrides", g.trainer_overrides}};
  return j.dump();
}

inline std::string descriptor_for(const Genome& g) {
  return to_string(g.estimator.algorithm) + "-" +
         hex_tag(fnv1a(genome_canonical_key(g)), 8);
}

inline Genome default_grpo_genome() {
  Genome g;
  g.estimator = EstimatorConfig{};
  g.descriptor = "grpo";
  return g;
}

// ---------------------------------------------------------------------------
// Genome distance: Hamming on the categorical field + range-normalized
// absolute difference on numerics, averaged. Trainer overrides enter at
// their effective values.
// ---------------------------------------------------------------------------

inline std::vector<double> genome_numeric_vector(const Genome& g,
                                                 double default_beta_kl = 0.0,
                                                 double default_entropy_coeff = 0.0) {
  std::vector<double> out;
  out.reserve(estimator_field_ranges().size() + 2);
  for (const auto& fr : estimator_field_ranges()) out.push_back(g.estimator.*(fr.member));
  out.push_back(g.trainer_overrides.beta_kl.value_or(default_beta_kl));
  out.push_back(g.trainer_overrides.entropy_coeff.value_or(default_entropy_coeff));
  return out;
}

inline double genome_distance(const Genome& a, const Genome& b) {
  const auto va = genome_numeric_vector(a);
  const auto vb = genome_numeric_vector(b);
  double acc = (a.estimator.algorithm == b.estimator.algorithm) ? 0.0 : 1.0;
  const auto& efr = estimator_field_ranges();
  const auto& tfr = trainer_field_ranges();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double width = i < efr.size() ? efr[i].hi - efr[i].lo
                                        : tfr[i - efr.size()].hi - tfr[i - efr.size()].lo;
    acc += std::min(1.0, std::abs(va[i] - vb[i]) / width);
  }
  return acc / static_cast<double>(1 + va.size());
}

}  // namespace poise

#endif  // POISE_GENOME_HPP_
