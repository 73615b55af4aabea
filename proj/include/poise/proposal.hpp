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
// Proposal phase: tiered reference context, structured genome mutation,
// population generation, screening, and the pluggable external-proposer
// wire protocol.

#ifndef POISE_PROPOSAL_HPP_
#define POISE_PROPOSAL_HPP_

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/acquisition.hpp"
#include "poise/archive.hpp"
#include "poise/genome.hpp"

namespace poise {

// Three disjoint tiers: Pareto-frontier references, complementary references
// maximizing genome distance to the parent, and exploratory references
// sampled outside the parent's root-to-node lineage.
struct ReferenceSet {
  std::vector<std::string> pareto_refs;
  std::vector<std::string> complementary_refs;
  std::vector<std::string> exploratory_refs;
};

struct ContextSizes {
  int pareto = 4;
  int complementary = 2;
  int exploratory = 2;
};

inline void to_json(nlohmann::json& j, const ContextSizes& c) {
  j = nlohmann::json{{"pareto", c.pareto},
                     {"complementary", c.complementary},
                     {"exploratory", c.exploratory}};
}

inline void from_json(const nlohmann::json& j, ContextSizes& c) {
  c = ContextSizes{};
  c.pareto = j.value("pareto", 4);
  c.complementary = j.value("complementary", 2);
  c.exploratory = j.value("exploratory", 2);
}

// Tiers truncate when the archive is smaller than requested; never errors.
inline ReferenceSet build_context(const LineageTree& tree, const std::string& parent_id,
                                  const ContextSizes& sizes, Rng& rng) {
  const ArchiveEntry& parent = tree.get(parent_id);
  ReferenceSet refs;
  std::set<std::string> used{parent_id};

  // Tier 1: Pareto front on the six bucket metrics, best overall first.
  std::vector<MetricPoint> points;
  std::vector<Objective> objectives;
  for (int b = 0; b < kNumBuckets; ++b) {
    objectives.push_back({bucket_names()[b], Sense::maximize});
  }
  for (const auto& e : tree.entries()) points.push_back(metric_point(e));
  std::vector<std::string> front = pareto_frontier(points, objectives);
  std::sort(front.begin(), front.end(), [&](const std::string& a, const std::string& b) {
    return tree.get(a).metrics.overall > tree.get(b).metrics.overall;
  });
  for (const auto& id : front) {
    if (static_cast<int>(refs.pareto_refs.size()) >= sizes.pareto) break;
    if (used.insert(id).second) refs.pareto_refs.push_back(id);
  }

  // Tier 2: maximal genome distance to the parent.
  std::vector<std::pair<double, std::string>> by_dist;
  for (const auto& e : tree.entries()) {
    if (used.count(e.node_id)) continue;
    by_dist.emplace_back(genome_distance(parent.genome, e.genome), e.node_id);
  }
  std::stable_sort(by_dist.begin(), by_dist.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [d, id] : by_dist) {
    if (static_cast<int>(refs.complementary_refs.size()) >= sizes.complementary) break;
    used.insert(id);
    refs.complementary_refs.push_back(id);
  }

  // Tier 3: seeded sample from outside the parent's root-to-node lineage.
  std::set<std::string> lineage;
  for (const auto& id : tree.lineage_path(parent_id)) lineage.insert(id);
  std::vector<std::string> pool;
  for (const auto& e : tree.entries()) {
    if (!lineage.count(e.node_id) && !used.count(e.node_id)) pool.push_back(e.node_id);
  }
  while (!pool.empty() &&
         static_cast<int>(refs.exploratory_refs.size()) < sizes.exploratory) {
    const int pick = rng.uniform_int(static_cast<int>(pool.size()));
    refs.exploratory_refs.push_back(pool[static_cast<std::size_t>(pick)]);
    pool.erase(pool.begin() + pick);
  }
  return refs;
}

// ---------------------------------------------------------------------------
// Mutation
// ---------------------------------------------------------------------------

namespace detail {

inline void perturb_numeric(double& value, const FieldRange& fr, Rng& rng) {
  const double lo = fr.mutation_lo;
  if (std::abs(value) < 1e-12) {
    value = rng.uniform(lo, lo + 0.1 * (fr.hi - lo));
    return;
  }
  // log-uniform multiplicative factor in [0.5, 2.0]
  const double factor = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  value = clamp(value * factor, lo, fr.hi);
}

inline Algorithm resample_algorithm(Algorithm current,
                                    const std::vector<Algorithm>& pareto_pool, Rng& rng) {
  // Half the draws are biased toward families seen on the Pareto tier.
  if (!pareto_pool.empty() && rng.uniform() < 0.5) {
    const Algorithm pick =
        pareto_pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pareto_pool.size())))];
    if (pick != current) return pick;
  }
  const auto& names = algorithm_names();
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Algorithm pick = names[static_cast<std::size_t>(rng.uniform_int(
                                     static_cast<int>(names.size())))].first;
    if (pick != current) return pick;
  }
  return current;
}

}  // namespace detail

// Changes 1-3 fields: the algorithm family resampled (biased toward values
// seen in pareto refs), numeric fields perturbed multiplicatively within
// declared ranges. Falls back to a renamed parent clone after 8 failed
// attempts.
inline Genome mutate_genome(const Genome& parent, const LineageTree& tree,
                            const ReferenceSet& context, Rng& rng) {
  std::vector<Algorithm> pareto_pool;
  for (const auto& id : context.pareto_refs) {
    pareto_pool.push_back(tree.get(id).genome.estimator.algorithm);
  }
  const auto& ranges = estimator_field_ranges();
  const auto& trainer_ranges = trainer_field_ranges();
  // mutable fields: algorithm + estimator numerics + beta_kl + entropy_coeff
  const int n_fields = 1 + static_cast<int>(ranges.size()) + 2;

  for (int attempt = 0; attempt < 8; ++attempt) {
    Genome child = parent;
    const int n_mut = 1 + rng.uniform_int(3);
    std::set<int> fields;
    while (static_cast<int>(fields.size()) < n_mut) fields.insert(rng.uniform_int(n_fields));
    for (int f : fields) {
      if (f == 0) {
        child.estimator.algorithm =
            detail::resample_algorithm(child.estimator.algorithm, pareto_pool, rng);
      } else if (f <= static_cast<int>(ranges.size())) {
        const FieldRange& fr = ranges[static_cast<std::size_t>(f - 1)];
        detail::perturb_numeric(child.estimator.*(fr.member), fr, rng);
      } else if (f == static_cast<int>(ranges.size()) + 1) {
        double v = child.trainer_overrides.beta_kl.value_or(0.02);
        const FieldRange fr{"beta_kl", trainer_ranges[0].lo, trainer_ranges[0].hi,
                            trainer_ranges[0].lo, nullptr};
        detail::perturb_numeric(v, fr, rng);
        child.trainer_overrides.beta_kl = v;
      } else {
        double v = child.trainer_overrides.entropy_coeff.value_or(0.0);
        const FieldRange fr{"entropy_coeff", trainer_ranges[1].lo, trainer_ranges[1].hi,
                            trainer_ranges[1].lo, nullptr};
        detail::perturb_numeric(v, fr, rng);
        child.trainer_overrides.entropy_coeff = v;
      }
    }
    if (child.estimator.clip_lo >= child.estimator.clip_hi) continue;
    child.descriptor = descriptor_for(child);
    if (genome_is_valid(child)) return child;
  }
  Genome clone = parent;
  clone.descriptor = parent.descriptor + "-r" + hex_tag(rng.next_u64(), 4);
  return clone;
}

// n candidates with pairwise-distinct descriptors; candidates whose
// functional content duplicates an archived genome (canonical JSON
// equality) are regenerated with bounded retries and dropped if retries
// run out.
inline std::vector<Genome> generate_population(const Genome& parent,
                                               const LineageTree& tree,
                                               const ReferenceSet& context, int n,
                                               Rng& rng) {
  require(n >= 1, "generate_population: n must be >= 1");
  std::set<std::string> archived_keys;
  for (const auto& e : tree.entries()) archived_keys.insert(genome_canonical_key(e.genome));
  std::set<std::string> emitted_keys;
  std::set<std::string> emitted_descriptors;

  std::vector<Genome> out;
  for (int slot = 0; slot < n; ++slot) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      Genome cand = mutate_genome(parent, tree, context, rng);
      const std::string key = genome_canonical_key(cand);
      if (archived_keys.count(key) || emitted_keys.count(key)) continue;
      if (emitted_descriptors.count(cand.descriptor)) continue;
      emitted_keys.insert(key);
      emitted_descriptors.insert(cand.descriptor);
      out.push_back(std::move(cand));
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Screening: feasibility (ranges + structure), novelty (no archived
// duplicate), then ranking by GP-UCB on candidate features with novelty
// distance as tie-breaker. The head of the returned list is the selected
// candidate.
// ---------------------------------------------------------------------------

inline std::vector<Genome> screen_and_rank(const std::vector<Genome>& candidates,
                                           const LineageTree& tree,
                                           const AcquisitionContext& ctx,
                                           const std::string& parent_id) {
  std::set<std::string> archived_keys;
  for (const auto& e : tree.entries()) archived_keys.insert(genome_canonical_key(e.genome));
  const ArchiveEntry& parent = tree.get(parent_id);
  auto parent_it = std::find(ctx.node_ids.begin(), ctx.node_ids.end(), parent_id);
  require(parent_it != ctx.node_ids.end(), "screen_and_rank: parent not in context");
  const double parent_utility =
      ctx.utilities[static_cast<std::size_t>(parent_it - ctx.node_ids.begin())];

  struct Ranked {
    Genome genome;
    double ucb;
    double novelty;
    std::size_t order;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Genome& g = candidates[i];
    if (!genome_is_valid(g)) continue;
    if (archived_keys.count(genome_canonical_key(g))) continue;
    double ucb = 0.0;
    if (ctx.model) {
      ucb = gp_ucb(*ctx.model, ctx.space.candidate_features(g, parent, parent_utility),
                   ctx.weights.ucb_kappa);
    }
    double novelty = std::numeric_limits<double>::infinity();
    for (const auto& e : tree.entries()) {
      novelty = std::min(novelty, genome_distance(g, e.genome));
    }
    ranked.push_back({g, ucb, novelty, i});
  }
  require(!ranked.empty(), "screen_and_rank: all candidates filtered");
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.ucb != b.ucb) return a.ucb > b.ucb;
    if (a.novelty != b.novelty) return a.novelty > b.novelty;
    return a.order < b.order;
  });
  std::vector<Genome> out;
  out.reserve(ranked.size());
  for (auto& r : ranked) out.push_back(std::move(r.genome));
  return out;
}

// ---------------------------------------------------------------------------
// External proposer protocol: JSON request/response over a line-delimited
// stream or HTTP POST. Invalid entries are rejected with reasons and sent
// back once for correction (max 2 round-trips); an empty final result tells
// the loop to fall back to internal mutation.
// ---------------------------------------------------------------------------

struct ProposerRejection {
  int index = 0;
  std::string field;
  std::string reason;
};

inline void to_json(nlohmann::json& j, const ProposerRejection& r) {
  j = nlohmann::json{{"index", r.index}, {"field", r.field}, {"reason", r.reason}};
}

struct ProposalRequest {
  Genome parent;
  MetricVector parent_metrics;
  Reflection parent_reflection;
  std::vector<nlohmann::json> pareto_refs;
  std::vector<nlohmann::json> complementary_refs;
  std::vector<nlohmann::json> exploratory_refs;
  std::string constraint = "none";
  nlohmann::json priors;  // opaque pass-through
  std::vector<ProposerRejection> rejections;
  int round = 1;
};

inline nlohmann::json reference_document(const LineageTree& tree, const std::string& id) {
  const ArchiveEntry& e = tree.get(id);
  return nlohmann::json{{"node_id", e.node_id},
                        {"genome", e.genome},
                        {"metrics", e.metrics},
                        {"reflection", e.reflection}};
}

inline ProposalRequest make_proposal_request(const LineageTree& tree,
                                             const std::string& parent_id,
                                             const ReferenceSet& refs,
                                             const std::string& constraint) {
  const ArchiveEntry& p = tree.get(parent_id);
  ProposalRequest req;
  req.parent = p.genome;
  req.parent_metrics = p.metrics;
  req.parent_reflection = p.reflection;
  for (const auto& id : refs.pareto_refs) req.pareto_refs.push_back(reference_document(tree, id));
  for (const auto& id : refs.complementary_refs) {
    req.complementary_refs.push_back(reference_document(tree, id));
  }
  for (const auto& id : refs.exploratory_refs) {
    req.exploratory_refs.push_back(reference_document(tree, id));
  }
  req.constraint = constraint;
  return req;
}

inline void to_json(nlohmann::json& j, const ProposalRequest& r) {
  j = nlohmann::json{{"type", "proposal_request"},
                     {"round", r.round},
                     {"parent", r.parent},
                     {"parent_metrics", r.parent_metrics},
                     {"parent_reflection", r.parent_reflection},
                     {"references",
                      {{"pareto", r.pareto_refs},
                       {"complementary", r.complementary_refs},
                       {"exploratory", r.exploratory_refs}}},
                     {"constraint", r.constraint},
                     {"priors", r.priors},
                     {"rejections", r.rejections}};
}

// Validates one proposed genome document against the schema; returns the
// offending field name on failure.
inline std::optional<std::string> proposed_genome_error(const nlohmann::json& doc,
                                                        Genome& out) {
  try {
    out = doc.get<Genome>();
  } catch (const std::exception&) {
    return std::string("genome");
  }
  if (!(out.estimator.clip_lo < out.estimator.clip_hi)) return std::string("clip_lo");
  const auto violations = genome_range_violations(out);
  if (!violations.empty()) return violations.front().field;
  if (out.descriptor.empty()) return std::string("descriptor");
  return std::nullopt;
}

class ProposerTransport {
 public:
  virtual ~ProposerTransport() = default;
  // One request/response exchange; both sides are single-line JSON.
  virtual std::string exchange(const std::string& request_line) = 0;
};

struct ProposerResult {
  std::vector<Genome> genomes;
  std::vector<ProposerRejection> rejections;
  int rounds_used = 0;
};

// Runs the bounded-correction exchange. Transport errors and malformed
// responses surface as PoiseError; callers fall back to internal mutation.
inline ProposerResult external_proposer_exchange(ProposerTransport& transport,
                                                 ProposalRequest request) {
  ProposerResult result;
  std::set<std::string> accepted_keys;
  for (int round = 1; round <= 2; ++round) {
    request.round = round;
    nlohmann::json req_json = request;
    const std::string response_line = transport.exchange(req_json.dump());
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(response_line);
    } catch (const nlohmann::json::exception& e) {
      throw PoiseError(std::string("proposer: malformed response: ") + e.what());
    }
    require(response.contains("genomes") && response["genomes"].is_array(),
            "proposer: response missing genomes array");

    result.rounds_used = round;
    std::vector<ProposerRejection> rejections;
    int idx = 0;
    for (const auto& doc : response["genomes"]) {
      Genome g;
      const auto err = proposed_genome_error(doc, g);
      if (err) {
        rejections.push_back({idx, *err, "out of schema range or malformed"});
      } else if (accepted_keys.insert(genome_canonical_key(g)).second) {
        result.genomes.push_back(std::move(g));
      }
      ++idx;
    }
    result.rejections = rejections;
    if (rejections.empty()) break;
    request.rejections = rejections;
  }
  return result;
}

}  // namespace poise

#endif  // POISE_PROPOSAL_HPP_
