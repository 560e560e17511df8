#include "nnc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nnc/average.hpp"
#include "nnc/parallel.hpp"

namespace nnc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MethodNameEntry {
  MethodId id;
  std::string_view name;
};

constexpr MethodNameEntry kMethodNames[] = {
    {MethodId::RowNN, "rownn"},       {MethodId::ColNN, "colnn"},
    {MethodId::TSNN, "tsnn"},         {MethodId::DRNN, "drnn"},
    {MethodId::AutoNN, "autonn"},     {MethodId::AWNN, "awnn"},
    {MethodId::KernelNN, "kernelnn"}, {MethodId::KernelNNCol, "kernelnn-col"},
    {MethodId::W2NN, "w2nn"},         {MethodId::W2NNCol, "w2nn-col"},
};

}  // namespace

std::string_view method_name(MethodId id) {
  for (const auto& e : kMethodNames) {
    if (e.id == id) return e.name;
  }
  return "?";
}

MethodId method_from_string(std::string_view name) {
  for (const auto& e : kMethodNames) {
    if (e.name == name) return e.id;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

bool is_distributional(MethodId id) {
  switch (id) {
    case MethodId::KernelNN:
    case MethodId::KernelNNCol:
    case MethodId::W2NN:
    case MethodId::W2NNCol:
      return true;
    default:
      return false;
  }
}

Threshold Threshold::percentile(double q) {
  if (q < 0.0 || q > 100.0) throw std::invalid_argument("percentile must lie in [0, 100]");
  return {Kind::Percentile, q};
}

double Threshold::resolve(const DissimilarityProfile& profile) const {
  if (kind == Kind::Absolute) return value;
  return percentile_to_threshold(profile, value);
}

namespace {

// Percentile thresholds resolve against the profile; when nothing is defined
// no candidate can qualify anyway, so the threshold collapses to -inf rather
// than erroring (the two-sided neighborhoods still contain the target's own
// line in that case).
double resolve_or_neg_inf(const Threshold& th, const DissimilarityProfile& prof) {
  if (th.kind == Threshold::Kind::Absolute) return th.value;
  if (!prof.any_defined()) return -kInf;
  return percentile_to_threshold(prof, th.value);
}

DissimilarityProfile make_profile(const MaskedMatrix& m, Axis axis, std::size_t target,
                                  std::size_t exclude, const PairwiseCache* cache) {
  if (cache) return cache->profile(target, exclude);
  return dissimilarity_profile(m, axis, target, exclude);
}

// One-sided thresholded mean along an axis. For Axis::Row the donors are the
// other rows observed at the target column; Axis::Col is the mirror image.
Estimate axis_nn(const MaskedMatrix& m, EntryIndex target, Axis axis, const Threshold& eta,
                 const PairwiseCache* cache) {
  const bool row = axis == Axis::Row;
  const std::size_t along = row ? target.row : target.col;
  const std::size_t excl = row ? target.col : target.row;
  const DissimilarityProfile prof = make_profile(m, axis, along, excl, cache);
  if (!prof.any_defined()) {
    throw NoObservedDonor("no line shares observations with the target");
  }
  const double threshold = resolve_or_neg_inf(eta, prof);

  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    if (!prof.defined[k] || prof.values[k] > threshold) continue;
    const std::size_t j = prof.index_of(k);
    const bool obs = row ? m.observed(j, target.col) : m.observed(target.row, j);
    if (!obs) continue;
    sum += row ? m.at(j, target.col) : m.at(target.row, j);
    ++count;
  }
  if (count > 0) return {sum / count, false, count};

  // fallback: nearest defined line observed at the target
  double best = kInf;
  std::size_t best_j = 0;
  bool found = false;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    if (!prof.defined[k]) continue;
    const std::size_t j = prof.index_of(k);
    const bool obs = row ? m.observed(j, target.col) : m.observed(target.row, j);
    if (obs && prof.values[k] < best) {
      best = prof.values[k];
      best_j = j;
      found = true;
    }
  }
  if (!found) throw NoObservedDonor("no neighbor is observed at the target");
  const double v = row ? m.at(best_j, target.col) : m.at(target.row, best_j);
  return {v, true, 1};
}

// membership of the two-sided neighborhoods; the target's own line is always
// a member (self-distance zero by convention)
std::vector<std::size_t> threshold_members(const DissimilarityProfile& prof, double eta) {
  std::vector<std::size_t> members;
  members.reserve(prof.size() + 1);
  bool self_added = false;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    const std::size_t j = prof.index_of(k);
    if (!self_added && j > prof.target) {
      members.push_back(prof.target);
      self_added = true;
    }
    if (prof.defined[k] && prof.values[k] <= eta) members.push_back(j);
  }
  if (!self_added) members.push_back(prof.target);
  return members;
}

struct TsnnCore {
  double value = 0.0;
  int count = 0;
};

// mean over the product neighborhood, target cell excluded; nullopt when the
// product holds no observed cell
std::optional<TsnnCore> tsnn_core(const MaskedMatrix& m, EntryIndex target,
                                  const DissimilarityProfile& rowp,
                                  const DissimilarityProfile& colp, double eta_row,
                                  double eta_col) {
  const std::vector<std::size_t> rows = threshold_members(rowp, eta_row);
  const std::vector<std::size_t> cols = threshold_members(colp, eta_col);
  double sum = 0.0;
  int count = 0;
  for (std::size_t j : rows) {
    for (std::size_t s : cols) {
      if (j == target.row && s == target.col) continue;
      if (!m.observed(j, s)) continue;
      sum += m.at(j, s);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return TsnnCore{sum / count, count};
}

// fallback donor for the two-sided estimator: the observed cell minimizing
// the combined row-plus-column dissimilarity (self lines at distance zero)
Estimate tsnn_fallback(const MaskedMatrix& m, EntryIndex target,
                       const DissimilarityProfile& rowp, const DissimilarityProfile& colp) {
  std::vector<double> row_d(m.rows(), kInf);
  std::vector<double> col_d(m.cols(), kInf);
  row_d[target.row] = 0.0;
  col_d[target.col] = 0.0;
  for (std::size_t k = 0; k < rowp.size(); ++k) {
    if (rowp.defined[k]) row_d[rowp.index_of(k)] = rowp.values[k];
  }
  for (std::size_t k = 0; k < colp.size(); ++k) {
    if (colp.defined[k]) col_d[colp.index_of(k)] = colp.values[k];
  }
  double best = kInf;
  EntryIndex best_e{0, 0};
  bool found = false;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    if (row_d[j] == kInf) continue;
    for (std::size_t s = 0; s < m.cols(); ++s) {
      if (col_d[s] == kInf) continue;
      if (j == target.row && s == target.col) continue;
      if (!m.observed(j, s)) continue;
      const double d = row_d[j] + col_d[s];
      if (d < best) {
        best = d;
        best_e = {j, s};
        found = true;
      }
    }
  }
  if (!found) throw NoObservedDonor("no observed cell reachable from the target");
  return {m.at(best_e.row, best_e.col), true, 1};
}

struct TwoSidedProfiles {
  DissimilarityProfile row, col;
  double eta_row = 0.0, eta_col = 0.0;
};

TwoSidedProfiles two_sided_profiles(const MaskedMatrix& m, EntryIndex target,
                                    const Threshold& eta_row, const Threshold& eta_col,
                                    const PairwiseCache* row_cache,
                                    const PairwiseCache* col_cache) {
  TwoSidedProfiles p;
  p.row = make_profile(m, Axis::Row, target.row, target.col, row_cache);
  p.col = make_profile(m, Axis::Col, target.col, target.row, col_cache);
  p.eta_row = resolve_or_neg_inf(eta_row, p.row);
  p.eta_col = resolve_or_neg_inf(eta_col, p.col);
  return p;
}

Estimate drnn_from_parts(const Estimate& row_est, const Estimate& col_est,
                         const std::optional<TsnnCore>& ts) {
  if (!ts) {
    return {0.5 * (row_est.value + col_est.value), true,
            std::min(row_est.neighbor_count, col_est.neighbor_count)};
  }
  Estimate out;
  out.value = row_est.value + col_est.value - ts->value;
  out.fallback_used = row_est.fallback_used || col_est.fallback_used;
  out.neighbor_count = std::min({row_est.neighbor_count, col_est.neighbor_count, ts->count});
  return out;
}

}  // namespace

Estimate impute_rownn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                      const PairwiseCache* row_cache) {
  return axis_nn(m, target, Axis::Row, eta_row, row_cache);
}

Estimate impute_colnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_col,
                      const PairwiseCache* col_cache) {
  return axis_nn(m, target, Axis::Col, eta_col, col_cache);
}

Estimate impute_tsnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                     const Threshold& eta_col, const PairwiseCache* row_cache,
                     const PairwiseCache* col_cache) {
  const TwoSidedProfiles p = two_sided_profiles(m, target, eta_row, eta_col, row_cache, col_cache);
  const auto core = tsnn_core(m, target, p.row, p.col, p.eta_row, p.eta_col);
  if (core) return {core->value, false, core->count};
  return tsnn_fallback(m, target, p.row, p.col);
}

Estimate impute_drnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                     const Threshold& eta_col, const PairwiseCache* row_cache,
                     const PairwiseCache* col_cache) {
  const Estimate row_est = axis_nn(m, target, Axis::Row, eta_row, row_cache);
  const Estimate col_est = axis_nn(m, target, Axis::Col, eta_col, col_cache);
  const TwoSidedProfiles p = two_sided_profiles(m, target, eta_row, eta_col, row_cache, col_cache);
  const auto ts = tsnn_core(m, target, p.row, p.col, p.eta_row, p.eta_col);
  return drnn_from_parts(row_est, col_est, ts);
}

Estimate impute_autonn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                       const Threshold& eta_col, double alpha, const PairwiseCache* row_cache,
                       const PairwiseCache* col_cache) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0, 1]");
  const Estimate dr = impute_drnn(m, target, eta_row, eta_col, row_cache, col_cache);
  const Estimate ts = impute_tsnn(m, target, eta_row, eta_col, row_cache, col_cache);
  Estimate out;
  out.value = alpha * dr.value + (1.0 - alpha) * ts.value;
  out.fallback_used = dr.fallback_used || ts.fallback_used;
  out.neighbor_count = std::min(dr.neighbor_count, ts.neighbor_count);
  return out;
}

DistEstimate impute_dist_nn(const DistMatrix& dm, EntryIndex target, const Threshold& eta,
                            const EntryMetric& metric, Axis axis, const PairwiseCache* cache) {
  const bool row = axis == Axis::Row;
  const std::size_t along = row ? target.row : target.col;
  const std::size_t excl = row ? target.col : target.row;
  const DissimilarityProfile prof =
      cache ? cache->profile(along, excl) : dissimilarity_profile(dm, axis, along, excl, metric);
  if (!prof.any_defined()) {
    throw NoObservedDonor("no line shares observations with the target");
  }
  const double threshold = resolve_or_neg_inf(eta, prof);

  std::vector<EmpiricalMeasure> donors;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    if (!prof.defined[k] || prof.values[k] > threshold) continue;
    const std::size_t j = prof.index_of(k);
    const bool obs = row ? dm.observed(j, target.col) : dm.observed(target.row, j);
    if (!obs) continue;
    const auto samples = row ? dm.samples_at(j, target.col) : dm.samples_at(target.row, j);
    donors.push_back(EmpiricalMeasure::from_samples(samples));
  }
  bool fallback = false;
  if (donors.empty()) {
    double best = kInf;
    std::size_t best_j = 0;
    bool found = false;
    for (std::size_t k = 0; k < prof.size(); ++k) {
      if (!prof.defined[k]) continue;
      const std::size_t j = prof.index_of(k);
      const bool obs = row ? dm.observed(j, target.col) : dm.observed(target.row, j);
      if (obs && prof.values[k] < best) {
        best = prof.values[k];
        best_j = j;
        found = true;
      }
    }
    if (!found) throw NoObservedDonor("no neighbor is observed at the target");
    const auto samples =
        row ? dm.samples_at(best_j, target.col) : dm.samples_at(target.row, best_j);
    donors.push_back(EmpiricalMeasure::from_samples(samples));
    fallback = true;
  }
  const std::vector<double> w(donors.size(), 1.0);
  EmpiricalMeasure bary = metric.kind == EntryMetric::Kind::W2Squared
                              ? w2_barycenter(w, donors)
                              : mmd_barycenter(w, donors);
  return {std::move(bary), fallback, static_cast<int>(donors.size())};
}

std::vector<std::optional<Estimate>> batch_impute_scalar(const MaskedMatrix& m, MethodId method,
                                                         const ScalarHyperParams& params,
                                                         std::span<const EntryIndex> targets,
                                                         Exec exec) {
  if (is_distributional(method)) {
    throw std::invalid_argument("distributional estimator on a scalar matrix");
  }
  if (method == MethodId::AWNN) {
    AwnnOptions opts;
    opts.reg_log_term = params.awnn_reg;
    opts.exec = exec;
    return impute_awnn(m, targets, opts).estimates;
  }
  const bool needs_row = method != MethodId::ColNN;
  const bool needs_col = method != MethodId::RowNN;
  std::optional<PairwiseCache> row_cache, col_cache;
  if (needs_row && cache_worthwhile(m.rows(), m.cols(), targets.size())) {
    row_cache = PairwiseCache::build(m, Axis::Row, exec);
  }
  if (needs_col && cache_worthwhile(m.cols(), m.rows(), targets.size())) {
    col_cache = PairwiseCache::build(m, Axis::Col, exec);
  }
  const PairwiseCache* rc = row_cache ? &*row_cache : nullptr;
  const PairwiseCache* cc = col_cache ? &*col_cache : nullptr;

  std::vector<std::optional<Estimate>> out(targets.size());
  parallel_for(targets.size(), exec, [&](std::size_t k) {
    try {
      switch (method) {
        case MethodId::RowNN:
          out[k] = impute_rownn(m, targets[k], params.eta_row, rc);
          break;
        case MethodId::ColNN:
          out[k] = impute_colnn(m, targets[k], params.eta_col, cc);
          break;
        case MethodId::TSNN:
          out[k] = impute_tsnn(m, targets[k], params.eta_row, params.eta_col, rc, cc);
          break;
        case MethodId::DRNN:
          out[k] = impute_drnn(m, targets[k], params.eta_row, params.eta_col, rc, cc);
          break;
        default:
          out[k] = impute_autonn(m, targets[k], params.eta_row, params.eta_col, params.alpha, rc,
                                 cc);
          break;
      }
    } catch (const NoObservedDonor&) {
      out[k] = std::nullopt;
    }
  });
  return out;
}

std::vector<std::optional<DistEstimate>> batch_impute_dist(const DistMatrix& dm, MethodId method,
                                                           const Threshold& eta,
                                                           const EntryMetric& metric,
                                                           std::span<const EntryIndex> targets,
                                                           Exec exec) {
  if (!is_distributional(method)) {
    throw std::invalid_argument("scalar estimator on a distributional matrix");
  }
  const Axis axis =
      (method == MethodId::KernelNNCol || method == MethodId::W2NNCol) ? Axis::Col : Axis::Row;
  const std::size_t along = axis == Axis::Row ? dm.rows() : dm.cols();
  const std::size_t across = axis == Axis::Row ? dm.cols() : dm.rows();
  std::optional<PairwiseCache> cache;
  if (cache_worthwhile(along, across, targets.size())) {
    cache = PairwiseCache::build(dm, axis, metric, exec);
  }
  const PairwiseCache* cp = cache ? &*cache : nullptr;
  std::vector<std::optional<DistEstimate>> out(targets.size());
  parallel_for(targets.size(), exec, [&](std::size_t k) {
    try {
      out[k] = impute_dist_nn(dm, targets[k], eta, metric, axis, cp);
    } catch (const NoObservedDonor&) {
      out[k] = std::nullopt;
    }
  });
  return out;
}

}  // namespace nnc
