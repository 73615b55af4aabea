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
// Lineage prioritization: node features, the discounted top-K descendant
// gain target, a squared-exponential-kernel GP regressor with UCB, and the
// composite parent-selection score.

#ifndef POISE_ACQUISITION_HPP_
#define POISE_ACQUISITION_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/archive.hpp"

namespace poise {

struct AcquisitionWeights {
  double w_pareto = 0.3;
  double w_perf = 0.3;
  double w_div = 0.2;
  double w_bayes = 0.2;
  double gp_noise = 1e-4;
  double ucb_kappa = 1.0;
  double gain_gamma = 0.9;
  double gain_beta = 5.0;  // Overall points
  int gain_k = 3;

  void validate() const {
    require(w_pareto >= 0 && w_perf >= 0 && w_div >= 0 && w_bayes >= 0,
            "AcquisitionWeights: weights must be non-negative");
    require(w_pareto + w_perf + w_div + w_bayes > 0,
            "AcquisitionWeights: weights must sum > 0");
    require(gain_gamma > 0.0 && gain_gamma <= 1.0,
            "AcquisitionWeights: gain_gamma must be in (0,1]");
    require(gain_beta > 0.0, "AcquisitionWeights: gain_beta must be > 0");
    require(gain_k >= 1, "AcquisitionWeights: gain_k must be >= 1");
    require(gp_noise >= 0.0, "AcquisitionWeights: gp_noise must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const AcquisitionWeights& w) {
  j = nlohmann::json{{"w_pareto", w.w_pareto},   {"w_perf", w.w_perf},
                     {"w_div", w.w_div},         {"w_bayes", w.w_bayes},
                     {"gp_noise", w.gp_noise},   {"ucb_kappa", w.ucb_kappa},
                     {"gain_gamma", w.gain_gamma}, {"gain_beta", w.gain_beta},
                     {"gain_k", w.gain_k}};
}

inline void from_json(const nlohmann::json& j, AcquisitionWeights& w) {
  w = AcquisitionWeights{};
  w.w_pareto = j.value("w_pareto", 0.3);
  w.w_perf = j.value("w_perf", 0.3);
  w.w_div = j.value("w_div", 0.2);
  w.w_bayes = j.value("w_bayes", 0.2);
  w.gp_noise = j.value("gp_noise", 1e-4);
  w.ucb_kappa = j.value("ucb_kappa", 1.0);
  w.gain_gamma = j.value("gain_gamma", 0.9);
  w.gain_beta = j.value("gain_beta", 5.0);
  w.gain_k = j.value("gain_k", 3);
  w.validate();
}

// ---------------------------------------------------------------------------
// Discounted Top-K Descendant Gain:
//   y_d = mean over the top-K descendants c of gamma^depth(c,d) *
//         tanh((U(c) - U(d)) / beta)
// ranked by that discounted gain; fewer than K descendants means all of
// them, a leaf scores 0.
// ---------------------------------------------------------------------------

inline double discounted_topk_gain(
    const LineageTree& tree, const std::string& node_id, const AcquisitionWeights& w,
    const std::function<double(const ArchiveEntry&)>& utility) {
  const ArchiveEntry& node = tree.get(node_id);
  const double u_node = utility(node);
  const int node_depth = node.depth;
  std::vector<double> gains;
  for (const auto& did : tree.descendants(node_id)) {
    const ArchiveEntry& d = tree.get(did);
    const double rel_depth = static_cast<double>(d.depth - node_depth);
    gains.push_back(std::pow(w.gain_gamma, rel_depth) *
                    std::tanh((utility(d) - u_node) / w.gain_beta));
  }
  if (gains.empty()) return 0.0;
  std::sort(gains.begin(), gains.end(), std::greater<double>());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(w.gain_k), gains.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += gains[i];
  return acc / static_cast<double>(k);
}

inline double discounted_topk_gain(const LineageTree& tree, const std::string& node_id,
                                   const AcquisitionWeights& w) {
  return discounted_topk_gain(
      tree, node_id, w, [](const ArchiveEntry& e) { return e.metrics.overall; });
}

// ---------------------------------------------------------------------------
// Gaussian process with a squared-exponential kernel. Lengthscale comes from
// the median heuristic, the prior variance from the target spread; no
// hyperparameter optimization (robustness at tiny sample sizes).
// ---------------------------------------------------------------------------

struct GpConfig {
  double noise = 1e-4;
};

namespace detail {

// Dense Cholesky; returns false if the matrix is not positive definite.
inline bool cholesky(std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
      if (i == j) {
        if (sum <= 0.0) return false;
        a[i][i] = std::sqrt(sum);
      } else {
        a[i][j] = sum / a[j][j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i][j] = 0.0;
  }
  return true;
}

inline std::vector<double> chol_solve(const std::vector<std::vector<double>>& l,
                                      std::vector<double> b) {
  const std::size_t n = l.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= l[k][ii] * b[k];
    b[ii] /= l[ii][ii];
  }
  return b;
}

}  // namespace detail

class GpModel {
 public:
  struct Posterior {
    double mean = 0.0;
    double stddev = 0.0;
  };

  static GpModel fit(const std::vector<std::vector<double>>& features,
                     const std::vector<double>& targets, const GpConfig& cfg) {
    require(!features.empty(), "gp_fit: needs at least one training point");
    require(features.size() == targets.size(), "gp_fit: feature/target count mismatch");
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
      require(f.size() == dim, "gp_fit: inconsistent feature dimensions");
      require(all_finite(f), "gp_fit: non-finite feature");
    }

    GpModel m;
    m.x_ = features;
    m.noise_ = cfg.noise;
    m.prior_mean_ = mean(targets);
    const double var = pop_variance(targets);
    m.prior_var_ = var > 1e-12 ? var : 1.0;

    std::vector<double> dists;
    for (std::size_t i = 0; i < features.size(); ++i) {
      for (std::size_t j = i + 1; j < features.size(); ++j) {
        const double d = euclidean(features[i], features[j]);
        if (d > 0.0) dists.push_back(d);
      }
    }
    m.lengthscale_ = dists.empty() ? 1.0 : median(dists);

    const std::size_t n = features.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        k[i][j] = m.kernel(features[i], features[j]);
      }
    }
    double jitter = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      m.chol_ = k;
      for (std::size_t i = 0; i < n; ++i) m.chol_[i][i] += cfg.noise + jitter;
      ok = detail::cholesky(m.chol_);
      jitter = jitter == 0.0 ? 1e-12 : jitter * 10.0;
    }
    require(ok, "gp_fit: kernel matrix not positive definite after jitter escalation");

    std::vector<double> centered(targets);
    for (double& y : centered) y -= m.prior_mean_;
    m.alpha_ = detail::chol_solve(m.chol_, centered);
    return m;
  }

  Posterior predict(const std::vector<double>& x) const {
    require(x.size() == x_.front().size(), "gp predict: dimension mismatch");
    const std::size_t n = x_.size();
    std::vector<double> ks(n);
    for (std::size_t i = 0; i < n; ++i) ks[i] = kernel(x, x_[i]);
    double mu = prior_mean_;
    for (std::size_t i = 0; i < n; ++i) mu += ks[i] * alpha_[i];
    const std::vector<double> v = detail::chol_solve(chol_, ks);
    double var = prior_var_;
    for (std::size_t i = 0; i < n; ++i) var -= ks[i] * v[i];
    Posterior p;
    p.mean = mu;
    p.stddev = std::sqrt(std::max(0.0, var));
    return p;
  }

  double prior_mean() const { return prior_mean_; }
  double prior_stddev() const { return std::sqrt(prior_var_); }
  double lengthscale() const { return lengthscale_; }

 private:
  double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    const double d = euclidean(a, b);
    return prior_var_ * std::exp(-0.5 * d * d / (lengthscale_ * lengthscale_));
  }

  std::vector<std::vector<double>> x_;
  std::vector<std::vector<double>> chol_;
  std::vector<double> alpha_;
  double prior_mean_ = 0.0;
  double prior_var_ = 1.0;
  double lengthscale_ = 1.0;
  double noise_ = 1e-4;
};

inline GpModel gp_fit(const std::vector<std::vector<double>>& features,
                      const std::vector<double>& targets, const GpConfig& cfg) {
  return GpModel::fit(features, targets, cfg);
}

inline double gp_ucb(const GpModel& model, const std::vector<double>& x, double kappa) {
  const GpModel::Posterior p = model.predict(x);
  return p.mean + kappa * p.stddev;
}

// ---------------------------------------------------------------------------
// Node features: one-hot algorithm family, range-scaled numeric parameters,
// then min-max normalized overall, depth, and subtree size. Fixed
// dimensionality per run.
// ---------------------------------------------------------------------------

class FeatureSpace {
 public:
  static FeatureSpace build(const LineageTree& tree,
                            const std::function<double(const ArchiveEntry&)>& utility) {
    FeatureSpace fs;
    const std::size_t n_alg = algorithm_names().size();
    std::vector<std::vector<double>> raw;
    for (const auto& e : tree.entries()) {
      fs.node_ids_.push_back(e.node_id);
      std::vector<double> row = genome_numeric_vector(e.genome);
      row.push_back(utility(e));
      row.push_back(static_cast<double>(e.depth));
      row.push_back(static_cast<double>(tree.subtree_size(e.node_id)));
      raw.push_back(std::move(row));
    }
    const std::size_t n_num = raw.empty() ? 0 : raw.front().size();
    fs.lo_.assign(n_num, std::numeric_limits<double>::infinity());
    fs.hi_.assign(n_num, -std::numeric_limits<double>::infinity());
    for (const auto& row : raw) {
      for (std::size_t d = 0; d < n_num; ++d) {
        fs.lo_[d] = std::min(fs.lo_[d], row[d]);
        fs.hi_[d] = std::max(fs.hi_[d], row[d]);
      }
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::vector<double> feat(n_alg, 0.0);
      feat[static_cast<std::size_t>(tree.entries()[i].genome.estimator.algorithm)] = 1.0;
      for (std::size_t d = 0; d < n_num; ++d) feat.push_back(fs.scale(d, raw[i][d]));
      fs.features_.push_back(std::move(feat));
    }
    fs.n_alg_ = n_alg;
    return fs;
  }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<std::vector<double>>& features() const { return features_; }

  const std::vector<double>& features_of(const std::string& id) const {
    for (std::size_t i = 0; i < node_ids_.size(); ++i) {
      if (node_ids_[i] == id) return features_[i];
    }
    throw PoiseError("FeatureSpace: unknown node " + id);
  }

  // Features for a not-yet-archived candidate: the parent's utility stands
  // in for the unknown overall, depth is parent depth + 1, subtree size 0.
  std::vector<double> candidate_features(const Genome& genome,
                                         const ArchiveEntry& parent,
                                         double parent_utility) const {
    std::vector<double> feat(n_alg_, 0.0);
    feat[static_cast<std::size_t>(genome.estimator.algorithm)] = 1.0;
    std::vector<double> row = genome_numeric_vector(genome);
    row.push_back(parent_utility);
    row.push_back(static_cast<double>(parent.depth + 1));
    row.push_back(0.0);
    for (std::size_t d = 0; d < row.size(); ++d) feat.push_back(scale(d, row[d]));
    return feat;
  }

 private:
  double scale(std::size_t d, double v) const {
    const double width = hi_[d] - lo_[d];
    if (width <= 0.0) return 0.5;
    return clamp((v - lo_[d]) / width, 0.0, 1.0);
  }

  std::size_t n_alg_ = 0;
  std::vector<std::string> node_ids_;
  std::vector<std::vector<double>> features_;
  std::vector<double> lo_, hi_;
};

// ---------------------------------------------------------------------------
// Composite score s(d) = w_pareto*U_pareto + w_perf*U_perf + w_div*U_div +
// w_bayes*alpha_GP.
//   U_pareto = 1/(1 + front_rank) under non-dominated sorting on the six
//              bucket metrics.
//   U_perf   = min-max normalized utility over the archive (0.5 when the
//              range is degenerate).
//   U_div    = mean feature distance to the 5 nearest archived nodes (plus
//              any already-selected nodes), normalized by the archive's max
//              pairwise distance.
// ---------------------------------------------------------------------------

struct AcquisitionContext {
  AcquisitionWeights weights;
  FeatureSpace space;
  std::vector<std::string> node_ids;
  std::vector<double> utilities;
  std::vector<int> front_rank;
  double max_pair_dist = 0.0;
  std::optional<GpModel> model;
};

inline AcquisitionContext build_acquisition_context(
    const LineageTree& tree, const AcquisitionWeights& weights,
    const std::function<double(const ArchiveEntry&)>& utility) {
  require(!tree.empty(), "acquisition: empty archive");
  weights.validate();
  AcquisitionContext ctx;
  ctx.weights = weights;
  ctx.space = FeatureSpace::build(tree, utility);
  ctx.node_ids = ctx.space.node_ids();
  for (const auto& e : tree.entries()) ctx.utilities.push_back(utility(e));

  std::vector<MetricPoint> points;
  std::vector<Objective> objectives;
  for (int b = 0; b < kNumBuckets; ++b) {
    objectives.push_back({bucket_names()[b], Sense::maximize});
  }
  for (const auto& e : tree.entries()) points.push_back(metric_point(e));
  ctx.front_rank = nondominated_front_ranks(points, objectives);

  const auto& feats = ctx.space.features();
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (std::size_t j = i + 1; j < feats.size(); ++j) {
      ctx.max_pair_dist = std::max(ctx.max_pair_dist, euclidean(feats[i], feats[j]));
    }
  }

  // GP trains on nodes that already have descendants; their discounted
  // top-K gain is the regression target.
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < ctx.node_ids.size(); ++i) {
    if (!tree.children(ctx.node_ids[i]).empty()) {
      x.push_back(feats[i]);
      y.push_back(discounted_topk_gain(tree, ctx.node_ids[i], weights, utility));
    }
  }
  if (!x.empty()) {
    ctx.model = gp_fit(x, y, GpConfig{weights.gp_noise});
  }
  return ctx;
}

namespace detail {

inline double diversity_score(const AcquisitionContext& ctx, std::size_t idx,
                              const std::vector<std::vector<double>>& extra_neighbors) {
  if (ctx.max_pair_dist <= 0.0) return 0.0;
  std::vector<double> dists;
  const auto& feats = ctx.space.features();
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (j != idx) dists.push_back(euclidean(feats[idx], feats[j]));
  }
  for (const auto& f : extra_neighbors) dists.push_back(euclidean(feats[idx], f));
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t k = std::min<std::size_t>(5, dists.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += dists[i];
  return clamp(acc / static_cast<double>(k) / ctx.max_pair_dist, 0.0, 1.0);
}

inline double score_index(const AcquisitionContext& ctx, std::size_t idx,
                          const std::vector<std::vector<double>>& extra_neighbors) {
  const double u_pareto = 1.0 / (1.0 + ctx.front_rank[idx]);

  double u_min = *std::min_element(ctx.utilities.begin(), ctx.utilities.end());
  double u_max = *std::max_element(ctx.utilities.begin(), ctx.utilities.end());
  const double u_perf =
      u_max - u_min > 0.0 ? (ctx.utilities[idx] - u_min) / (u_max - u_min) : 0.5;

  const double u_div = diversity_score(ctx, idx, extra_neighbors);

  double alpha_gp = 0.0;
  if (ctx.model && ctx.weights.w_bayes > 0.0) {
    alpha_gp = gp_ucb(*ctx.model, ctx.space.features()[idx], ctx.weights.ucb_kappa);
  }
  return ctx.weights.w_pareto * u_pareto + ctx.weights.w_perf * u_perf +
         ctx.weights.w_div * u_div + ctx.weights.w_bayes * alpha_gp;
}

}  // namespace detail

struct ScoreBreakdown {
  double u_pareto = 0.0;
  double u_perf = 0.0;
  double u_div = 0.0;
  double alpha_gp = 0.0;
  double total = 0.0;
};

inline ScoreBreakdown score_node_breakdown(const AcquisitionContext& ctx,
                                           const std::string& node_id) {
  auto it = std::find(ctx.node_ids.begin(), ctx.node_ids.end(), node_id);
  require(it != ctx.node_ids.end(), "score_node: unknown node " + node_id);
  const std::size_t idx = static_cast<std::size_t>(it - ctx.node_ids.begin());
  ScoreBreakdown b;
  b.u_pareto = 1.0 / (1.0 + ctx.front_rank[idx]);
  double u_min = *std::min_element(ctx.utilities.begin(), ctx.utilities.end());
  double u_max = *std::max_element(ctx.utilities.begin(), ctx.utilities.end());
  b.u_perf = u_max - u_min > 0.0 ? (ctx.utilities[idx] - u_min) / (u_max - u_min) : 0.5;
  b.u_div = detail::diversity_score(ctx, idx, {});
  if (ctx.model && ctx.weights.w_bayes > 0.0) {
    b.alpha_gp = gp_ucb(*ctx.model, ctx.space.features()[idx], ctx.weights.ucb_kappa);
  }
  b.total = ctx.weights.w_pareto * b.u_pareto + ctx.weights.w_perf * b.u_perf +
            ctx.weights.w_div * b.u_div + ctx.weights.w_bayes * b.alpha_gp;
  return b;
}

inline double score_node(const LineageTree& tree, const std::string& node_id,
                         const AcquisitionWeights& weights) {
  const AcquisitionContext ctx = build_acquisition_context(
      tree, weights, [](const ArchiveEntry& e) { return e.metrics.overall; });
  return score_node_breakdown(ctx, node_id).total;
}

// Greedy selection of P distinct parents by score; the diversity term is
// recomputed against the already-selected set after each pick. Ties break
// toward insertion order.
inline std::vector<std::string> select_parents(const AcquisitionContext& ctx, int count) {
  require(count >= 1, "select_parents: count must be >= 1");
  const std::size_t n = ctx.node_ids.size();
  std::vector<bool> taken(n, false);
  std::vector<std::string> out;
  std::vector<std::vector<double>> selected_features;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(count), n);
  while (out.size() < want) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double s = detail::score_index(ctx, i, selected_features);
      if (s > best) {
        best = s;
        best_idx = i;
      }
    }
    taken[best_idx] = true;
    out.push_back(ctx.node_ids[best_idx]);
    selected_features.push_back(ctx.space.features()[best_idx]);
  }
  return out;
}

inline std::vector<std::string> select_parents(const LineageTree& tree,
                                               const AcquisitionWeights& weights,
                                               int count) {
  const AcquisitionContext ctx = build_acquisition_context(
      tree, weights, [](const ArchiveEntry& e) { return e.metrics.overall; });
  return select_parents(ctx, count);
}

}  // namespace poise

#endif  // POISE_ACQUISITION_HPP_
