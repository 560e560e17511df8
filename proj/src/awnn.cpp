#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "nnc/estimators.hpp"
#include "nnc/parallel.hpp"

namespace nnc {

namespace {

constexpr double kSigmaFloor = 1e-12;

struct WaterfillResult {
  double c = 0.0;          // water level: v_k = c - rho_k / (2 lambda)
  std::size_t active = 0;  // positive-weight count (prefix of the sorted rho)
};

// Exact simplex minimizer of lambda ||v||^2 + <v, rho> for sorted rho.
// The active set is the largest prefix m with (2 lambda + sum rho_1..m) / m
// > rho_m; ties in rho always land on the same side, so equal distances get
// equal weights.
WaterfillResult waterfill(const std::vector<double>& sorted_rho, double lambda) {
  WaterfillResult r;
  double prefix = 0.0;
  double c_num = 0.0;
  for (std::size_t m = 1; m <= sorted_rho.size(); ++m) {
    prefix += sorted_rho[m - 1];
    const double cand = (2.0 * lambda + prefix) / static_cast<double>(m);
    if (cand > sorted_rho[m - 1]) {
      r.active = m;
      c_num = cand;
    }
  }
  // c in the v_k formula carries the 1/(2 lambda) scaling
  r.c = c_num / (2.0 * lambda);
  return r;
}

}  // namespace

WeightVector awnn_weights(const DissimilarityProfile& profile,
                          std::span<const std::uint8_t> col_mask, double sigma2,
                          double reg_log_term) {
  if (!(sigma2 > 0.0)) throw NonPositiveVariance("sigma^2 must be positive");
  if (!(reg_log_term > 0.0)) throw std::invalid_argument("regularizer must be positive");
  std::vector<std::pair<double, std::size_t>> cand;  // (rho, slot)
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const std::size_t j = profile.index_of(k);
    if (j >= col_mask.size()) throw DimensionMismatch("column mask shorter than the axis");
    if (profile.defined[k] && col_mask[j]) cand.emplace_back(profile.values[k], k);
  }
  if (cand.empty()) throw NoObservedDonor("no candidate with a defined distance is observed");
  std::sort(cand.begin(), cand.end());

  std::vector<double> rho(cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k) rho[k] = cand[k].first;
  const double lambda = reg_log_term * sigma2;
  const WaterfillResult wf = waterfill(rho, lambda);

  WeightVector out;
  out.weights.assign(profile.size(), 0.0);
  for (std::size_t k = 0; k < wf.active; ++k) {
    out.weights[cand[k].second] = wf.c - rho[k] / (2.0 * lambda);
  }
  return out;
}

namespace {

// per-point donor list, rho-sorted; rho never changes across iterations
struct PointPlan {
  EntryIndex entry;
  bool observed = false;
  std::vector<double> rho;
  std::vector<double> z;       // donor values, rho order
  std::vector<std::size_t> slot;  // profile slots, rho order
};

}  // namespace

AwnnBatch impute_awnn(const MaskedMatrix& m, std::span<const EntryIndex> targets,
                      const AwnnOptions& opts) {
  if (m.observed_count() < 2) {
    throw TooFewSamples("the noise fixed point needs at least 2 observed entries");
  }
  if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const double reg =
      opts.reg_log_term > 0.0 ? opts.reg_log_term : 2.0 * std::log(2.0 * m.rows());

  // every observed entry becomes a target, so the cache almost always pays;
  // the worthwhile check only guards degenerate and oversized shapes
  std::optional<PairwiseCache> cache;
  if (cache_worthwhile(m.rows(), m.cols(), m.observed_count())) {
    cache = PairwiseCache::build(m, Axis::Row, opts.exec);
  }

  // estimation points: every observed entry (for residuals) plus the targets
  std::vector<PointPlan> points;
  std::vector<std::size_t> point_of_cell(m.rows() * m.cols(),
                                         std::numeric_limits<std::size_t>::max());
  for (const EntryIndex& e : m.observed_entries()) {
    point_of_cell[e.row * m.cols() + e.col] = points.size();
    points.push_back({e, true, {}, {}, {}});
  }
  for (const EntryIndex& e : targets) {
    std::size_t& ref = point_of_cell[e.row * m.cols() + e.col];
    if (ref == std::numeric_limits<std::size_t>::max()) {
      ref = points.size();
      points.push_back({e, false, {}, {}, {}});
    }
  }

  parallel_for(points.size(), opts.exec, [&](std::size_t p) {
    PointPlan& plan = points[p];
    const DissimilarityProfile prof =
        cache ? cache->profile(plan.entry.row, plan.entry.col)
              : dissimilarity_profile(m, Axis::Row, plan.entry.row, plan.entry.col);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t k = 0; k < prof.size(); ++k) {
      if (prof.defined[k] && m.observed(prof.index_of(k), plan.entry.col)) {
        cand.emplace_back(prof.values[k], k);
      }
    }
    std::sort(cand.begin(), cand.end());
    plan.rho.resize(cand.size());
    plan.z.resize(cand.size());
    plan.slot.resize(cand.size());
    for (std::size_t k = 0; k < cand.size(); ++k) {
      plan.rho[k] = cand[k].first;
      plan.slot[k] = cand[k].second;
      const std::size_t j = cand[k].second < plan.entry.row ? cand[k].second : cand[k].second + 1;
      plan.z[k] = m.at(j, plan.entry.col);
    }
  });

  // sigma^2 start: observed variance around the global mean
  const double mean = m.observed_mean();
  double sigma2 = 0.0;
  for (std::size_t k = 0; k < m.values().size(); ++k) {
    if (m.mask()[k]) sigma2 += sq_diff(m.values()[k], mean);
  }
  sigma2 = std::max(sigma2 / static_cast<double>(m.observed_count()), kSigmaFloor);

  std::vector<double> estimate(points.size(), 0.0);
  std::vector<std::uint8_t> has_estimate(points.size(), 0);
  AwnnState state;
  state.sigma2 = sigma2;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double lambda = reg * sigma2;
    parallel_for(points.size(), opts.exec, [&](std::size_t p) {
      const PointPlan& plan = points[p];
      if (plan.rho.empty()) {
        has_estimate[p] = 0;
        return;
      }
      const WaterfillResult wf = waterfill(plan.rho, lambda);
      double est = 0.0;
      for (std::size_t k = 0; k < wf.active; ++k) {
        est += (wf.c - plan.rho[k] / (2.0 * lambda)) * plan.z[k];
      }
      estimate[p] = est;
      has_estimate[p] = 1;
    });

    double rss = 0.0;
    std::size_t n_res = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (points[p].observed && has_estimate[p]) {
        rss += sq_diff(m.at(points[p].entry.row, points[p].entry.col), estimate[p]);
        ++n_res;
      }
    }
    state.iterations = iter + 1;
    if (n_res == 0) break;  // nothing to anchor the fixed point
    const double next = std::max(rss / static_cast<double>(n_res), kSigmaFloor);
    const double delta = std::abs(next - sigma2);
    sigma2 = next;
    state.sigma2 = sigma2;
    if (delta < opts.tol) {
      state.converged = true;
      break;
    }
  }

  AwnnBatch out;
  out.state = state;
  out.estimates.resize(targets.size());
  out.weights.resize(targets.size());
  const double lambda = reg * sigma2;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::size_t p = point_of_cell[targets[k].row * m.cols() + targets[k].col];
    const PointPlan& plan = points[p];
    if (plan.rho.empty()) {
      out.estimates[k] = std::nullopt;
      continue;
    }
    // value and weights both use the final sigma^2 so they stay consistent
    const WaterfillResult wf = waterfill(plan.rho, lambda);
    WeightVector wv;
    wv.weights.assign(m.rows() - 1, 0.0);
    Estimate e;
    e.value = 0.0;
    e.fallback_used = false;
    for (std::size_t i = 0; i < wf.active; ++i) {
      const double w = wf.c - plan.rho[i] / (2.0 * lambda);
      wv.weights[plan.slot[i]] = w;
      e.value += w * plan.z[i];
    }
    e.neighbor_count = static_cast<int>(wf.active);
    out.estimates[k] = e;
    out.weights[k] = std::move(wv);
  }
  return out;
}

}  // namespace nnc
