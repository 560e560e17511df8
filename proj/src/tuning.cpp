#include "nnc/tuning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "nnc/parallel.hpp"

namespace nnc {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Unbiased draw in [0, bound) by rejection; mt19937_64's output sequence is
// pinned by the standard, so holdouts reproduce across platforms (which
// uniform_int_distribution would not guarantee).
std::uint64_t bounded_u64(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t zone = max - max % bound;  // largest multiple of bound
  std::uint64_t r = rng();
  while (r >= zone) r = rng();
  return r % bound;
}

std::vector<EntryIndex> pick_holdout(std::vector<EntryIndex> obs, double fraction,
                                     std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("holdout fraction must lie in (0, 1]");
  }
  if (obs.empty()) throw AllMissing("no observed entries to hold out");
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(obs.size())));
  k = std::clamp<std::size_t>(k, 1, obs.size());
  const std::vector<std::size_t> keep = sample_indices(obs.size(), k, seed);
  std::vector<EntryIndex> out;
  out.reserve(k);
  for (std::size_t i : keep) out.push_back(obs[i]);
  std::sort(out.begin(), out.end());
  return out;
}

double mean_abs_error(const MaskedMatrix& full, std::span<const EntryIndex> holdout,
                      const std::vector<std::optional<Estimate>>& est, double penalty) {
  double sum = 0.0;
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    sum += est[i] ? std::abs(est[i]->value - full.at(holdout[i].row, holdout[i].col)) : penalty;
  }
  return sum / static_cast<double>(holdout.size());
}

// candidate grid as index triples (row percentile, col percentile, alpha);
// kNone marks an axis the method does not tune
struct CandidateGrid {
  std::vector<std::array<std::size_t, 3>> idx;

  static CandidateGrid enumerate(MethodId method, const SearchSpace& space) {
    const auto check = [](const std::vector<double>& g, double lo, double hi, const char* what) {
      if (g.empty()) throw EmptySearchSpace(std::string("empty grid: ") + what);
      for (double v : g) {
        if (!(v >= lo) || !(v <= hi)) {
          throw std::invalid_argument(std::string("grid value out of range: ") + what);
        }
      }
    };
    CandidateGrid grid;
    switch (method) {
      case MethodId::RowNN:
        check(space.eta_row_percentiles, 0.0, 100.0, "eta_row_percentiles");
        for (std::size_t r = 0; r < space.eta_row_percentiles.size(); ++r) {
          grid.idx.push_back({r, kNone, kNone});
        }
        break;
      case MethodId::ColNN:
        check(space.eta_col_percentiles, 0.0, 100.0, "eta_col_percentiles");
        for (std::size_t c = 0; c < space.eta_col_percentiles.size(); ++c) {
          grid.idx.push_back({kNone, c, kNone});
        }
        break;
      case MethodId::TSNN:
      case MethodId::DRNN:
        check(space.eta_row_percentiles, 0.0, 100.0, "eta_row_percentiles");
        check(space.eta_col_percentiles, 0.0, 100.0, "eta_col_percentiles");
        for (std::size_t r = 0; r < space.eta_row_percentiles.size(); ++r) {
          for (std::size_t c = 0; c < space.eta_col_percentiles.size(); ++c) {
            grid.idx.push_back({r, c, kNone});
          }
        }
        break;
      case MethodId::AutoNN:
        check(space.eta_row_percentiles, 0.0, 100.0, "eta_row_percentiles");
        check(space.eta_col_percentiles, 0.0, 100.0, "eta_col_percentiles");
        check(space.alpha_grid, 0.0, 1.0, "alpha_grid");
        for (std::size_t r = 0; r < space.eta_row_percentiles.size(); ++r) {
          for (std::size_t c = 0; c < space.eta_col_percentiles.size(); ++c) {
            for (std::size_t a = 0; a < space.alpha_grid.size(); ++a) {
              grid.idx.push_back({r, c, a});
            }
          }
        }
        break;
      case MethodId::AWNN:
        // no threshold: the simplex program adapts per target on its own
        grid.idx.push_back({kNone, kNone, kNone});
        break;
      default:
        throw std::invalid_argument("distributional estimators are tuned by tune_dist");
    }
    return grid;
  }

  ScalarHyperParams make(const SearchSpace& space, const std::array<std::size_t, 3>& t) const {
    ScalarHyperParams p;
    if (t[0] != kNone) p.eta_row = Threshold::percentile(space.eta_row_percentiles[t[0]]);
    if (t[1] != kNone) p.eta_col = Threshold::percentile(space.eta_col_percentiles[t[1]]);
    if (t[2] != kNone) p.alpha = space.alpha_grid[t[2]];
    return p;
  }
};

// per-target AutoNN ingredients, fixed for a given threshold pair
struct AutoParts {
  bool ok = false;
  Estimate dr, ts;
};

}  // namespace

std::vector<EntryIndex> holdout_split(const MaskedMatrix& m, double fraction,
                                      std::uint64_t seed) {
  return pick_holdout(m.observed_entries(), fraction, seed);
}

// first k of a seeded partial Fisher-Yates shuffle, returned sorted
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded_u64(rng, n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

double evaluate_params(const MaskedMatrix& full, const MaskedMatrix& train, MethodId method,
                       const ScalarHyperParams& params, std::span<const EntryIndex> holdout,
                       Exec exec) {
  const auto est = batch_impute_scalar(train, method, params, holdout, exec);
  const auto [lo, hi] = full.observed_range();
  return mean_abs_error(full, holdout, est, hi - lo);
}

TuneResult tune_with_holdout(const MaskedMatrix& m, MethodId method, const SearchSpace& space,
                             std::span<const EntryIndex> holdout, Exec exec) {
  if (space.budget < 1) throw EmptySearchSpace("budget must be at least 1");
  if (holdout.empty()) throw std::invalid_argument("holdout must be nonempty");
  for (const EntryIndex& e : holdout) {
    if (e.row >= m.rows() || e.col >= m.cols() || !m.observed(e.row, e.col)) {
      throw std::invalid_argument("holdout entries must be observed cells of the matrix");
    }
  }

  CandidateGrid grid = CandidateGrid::enumerate(method, space);
  if (grid.idx.size() > space.budget) {
    const auto keep = sample_indices(grid.idx.size(), space.budget,
                                                 space.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::array<std::size_t, 3>> subset;
    subset.reserve(keep.size());
    for (std::size_t i : keep) subset.push_back(grid.idx[i]);
    grid.idx = std::move(subset);
  }

  const MaskedMatrix train = m.with_masked(holdout);
  const auto [lo, hi] = m.observed_range();
  const double penalty = hi - lo;

  // shared caches; gated exactly like batch_impute_scalar so tune-time scores
  // reproduce under an independent re-run of the winner
  const bool needs_row = method != MethodId::ColNN && method != MethodId::AWNN;
  const bool needs_col = method != MethodId::RowNN && method != MethodId::AWNN;
  std::optional<PairwiseCache> row_cache, col_cache;
  if (needs_row && cache_worthwhile(train.rows(), train.cols(), holdout.size())) {
    row_cache = PairwiseCache::build(train, Axis::Row, exec);
  }
  if (needs_col && cache_worthwhile(train.cols(), train.rows(), holdout.size())) {
    col_cache = PairwiseCache::build(train, Axis::Col, exec);
  }
  const PairwiseCache* rc = row_cache ? &*row_cache : nullptr;
  const PairwiseCache* cc = col_cache ? &*col_cache : nullptr;

  // AutoNN shares the two component estimates across the alpha sweep; the
  // composition below is the same expression impute_autonn evaluates, so the
  // shared path yields identical doubles
  std::vector<AutoParts> parts;
  std::array<std::size_t, 2> parts_key = {kNone, kNone};
  const auto auto_parts = [&](const std::array<std::size_t, 3>& t,
                              const ScalarHyperParams& p) -> const std::vector<AutoParts>& {
    if (parts_key[0] != t[0] || parts_key[1] != t[1] || parts.empty()) {
      parts.assign(holdout.size(), {});
      parallel_for(holdout.size(), exec, [&](std::size_t k) {
        try {
          parts[k].dr = impute_drnn(train, holdout[k], p.eta_row, p.eta_col, rc, cc);
          parts[k].ts = impute_tsnn(train, holdout[k], p.eta_row, p.eta_col, rc, cc);
          parts[k].ok = true;
        } catch (const NoObservedDonor&) {
          parts[k].ok = false;
        }
      });
      parts_key = {t[0], t[1]};
    }
    return parts;
  };

  std::vector<std::optional<Estimate>> est(holdout.size());
  TuneResult res;
  res.holdout.assign(holdout.begin(), holdout.end());
  res.evaluations.reserve(grid.idx.size());
  for (const auto& t : grid.idx) {
    const ScalarHyperParams cand = grid.make(space, t);
    double score;
    if (method == MethodId::AWNN) {
      score = evaluate_params(m, train, method, cand, holdout, exec);
    } else if (method == MethodId::AutoNN) {
      const auto& pp = auto_parts(t, cand);
      for (std::size_t k = 0; k < holdout.size(); ++k) {
        if (!pp[k].ok) {
          est[k] = std::nullopt;
          continue;
        }
        Estimate e;
        e.value = cand.alpha * pp[k].dr.value + (1.0 - cand.alpha) * pp[k].ts.value;
        e.fallback_used = pp[k].dr.fallback_used || pp[k].ts.fallback_used;
        e.neighbor_count = std::min(pp[k].dr.neighbor_count, pp[k].ts.neighbor_count);
        est[k] = e;
      }
      score = mean_abs_error(m, holdout, est, penalty);
    } else {
      parallel_for(holdout.size(), exec, [&](std::size_t k) {
        try {
          switch (method) {
            case MethodId::RowNN:
              est[k] = impute_rownn(train, holdout[k], cand.eta_row, rc);
              break;
            case MethodId::ColNN:
              est[k] = impute_colnn(train, holdout[k], cand.eta_col, cc);
              break;
            case MethodId::TSNN:
              est[k] = impute_tsnn(train, holdout[k], cand.eta_row, cand.eta_col, rc, cc);
              break;
            default:
              est[k] = impute_drnn(train, holdout[k], cand.eta_row, cand.eta_col, rc, cc);
              break;
          }
        } catch (const NoObservedDonor&) {
          est[k] = std::nullopt;
        }
      });
      score = mean_abs_error(m, holdout, est, penalty);
    }
    res.evaluations.emplace_back(cand, score);
    if (res.evaluations.size() == 1 || score < res.best_score) {
      res.best_score = score;
      res.best_params = cand;
    }
  }
  return res;
}

TuneResult tune(const MaskedMatrix& m, MethodId method, const SearchSpace& space, Exec exec) {
  const std::vector<EntryIndex> holdout = holdout_split(m, space.holdout_fraction, space.seed);
  return tune_with_holdout(m, method, space, holdout, exec);
}

DistTuneResult tune_dist(const DistMatrix& dm, MethodId method, const EntryMetric& metric,
                         const SearchSpace& space, DistLoss loss, Exec exec) {
  if (!is_distributional(method)) {
    throw std::invalid_argument("scalar estimators are tuned by tune");
  }
  if (space.budget < 1) throw EmptySearchSpace("budget must be at least 1");
  const bool col_axis = method == MethodId::KernelNNCol || method == MethodId::W2NNCol;
  const std::vector<double>& grid =
      col_axis ? space.eta_col_percentiles : space.eta_row_percentiles;
  if (grid.empty()) throw EmptySearchSpace("threshold grid is empty");
  for (double q : grid) {
    if (!(q >= 0.0) || !(q <= 100.0)) {
      throw std::invalid_argument("percentiles must lie in [0, 100]");
    }
  }
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (order.size() > space.budget) {
    order = sample_indices(order.size(), space.budget,
                                       space.seed ^ 0x9e3779b97f4a7c15ull);
  }

  DistTuneResult res;
  res.holdout = pick_holdout(dm.observed_entries(), space.holdout_fraction, space.seed);
  const DistMatrix train = dm.with_masked(res.holdout);

  std::vector<EmpiricalMeasure> truth;
  truth.reserve(res.holdout.size());
  for (const EntryIndex& e : res.holdout) {
    truth.push_back(EmpiricalMeasure::from_samples(dm.samples_at(e.row, e.col)));
  }
  // failure penalty: 1 bounds KS; the mean loss is bounded by the spread of
  // the cell means over every observed cell
  double penalty = 1.0;
  if (loss == DistLoss::AbsMeanError) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const EntryIndex& e : dm.observed_entries()) {
      const double mu = EmpiricalMeasure::from_samples(dm.samples_at(e.row, e.col)).mean();
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
    }
    penalty = hi - lo;
  }

  bool first = true;
  for (std::size_t gi : order) {
    const Threshold eta = Threshold::percentile(grid[gi]);
    const auto est = batch_impute_dist(train, method, eta, metric, res.holdout, exec);
    double sum = 0.0;
    for (std::size_t k = 0; k < res.holdout.size(); ++k) {
      if (!est[k]) {
        sum += penalty;
      } else if (loss == DistLoss::KsDistance) {
        sum += ks_distance(est[k]->value, truth[k]);
      } else {
        sum += std::abs(est[k]->value.mean() - truth[k].mean());
      }
    }
    const double score = sum / static_cast<double>(res.holdout.size());
    ++res.evaluations;
    if (first || score < res.best_score) {
      res.best_score = score;
      res.best_eta = eta;
      first = false;
    }
  }
  return res;
}

}  // namespace nnc
