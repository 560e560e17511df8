#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nnc/estimators.hpp"
#include "nnc/masked_matrix.hpp"

namespace nnc {

/// Candidate grid for threshold / mixing parameters. Percentiles refer to the
/// per-target dissimilarity profile, so one percentile candidate induces a
/// different absolute radius for every target row or column.
struct SearchSpace {
  std::vector<double> eta_row_percentiles{20.0, 50.0, 80.0};
  std::vector<double> eta_col_percentiles{20.0, 50.0, 80.0};
  std::vector<double> alpha_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  /// Maximum number of candidates evaluated. When the full grid is larger, a
  /// seeded subsample is drawn (without replacement) and evaluated in grid
  /// order, so the result is reproducible for a fixed seed.
  std::size_t budget = 64;
  std::uint64_t seed = 0;
  /// Fraction of observed entries masked off as the validation holdout.
  double holdout_fraction = 0.2;
};

struct TuneResult {
  ScalarHyperParams best_params;
  double best_score = 0.0;
  /// Every candidate evaluated, in grid order, with its holdout score.
  std::vector<std::pair<ScalarHyperParams, double>> evaluations;
  /// The validation entries the score was computed on.
  std::vector<EntryIndex> holdout;
};

/// Draws a seeded holdout of observed entries: size round(fraction * observed),
/// at least 1, returned sorted row-major. fraction lies in (0, 1]; 1 selects
/// every observed entry. Deterministic for a fixed seed.
std::vector<EntryIndex> holdout_split(const MaskedMatrix& m, double fraction,
                                      std::uint64_t seed);

/// First k indices of a seeded uniform permutation of [0, n), sorted
/// ascending. The randomness is rejection-sampled from mt19937_64, so draws
/// reproduce across platforms.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

/// Mean absolute error of `method` at `params` over `holdout`, where the model
/// is fit on `train` (the matrix with the holdout masked off) and the truth is
/// read from `full`. Entries the estimator cannot produce (no donor at all)
/// are charged the observed range of `full` so a method that fails everywhere
/// cannot win. Exposed so leakage tests can re-score a fixed parameter choice.
double evaluate_params(const MaskedMatrix& full, const MaskedMatrix& train,
                       MethodId method, const ScalarHyperParams& params,
                       std::span<const EntryIndex> holdout, Exec exec = Exec::Parallel);

/// Grid search over the method's own axis of the space: RowNN tunes eta_row,
/// ColNN tunes eta_col, TSNN / DRNN tune the product, AutoNN adds the alpha
/// sweep, AWNN has nothing to tune here and evaluates the single default.
/// Ties keep the first candidate in grid order.
TuneResult tune(const MaskedMatrix& m, MethodId method, const SearchSpace& space,
                Exec exec = Exec::Parallel);

/// Same search, but the holdout is supplied by the caller instead of drawn
/// from space.seed. `m` must still contain the holdout entries as observed.
TuneResult tune_with_holdout(const MaskedMatrix& m, MethodId method,
                             const SearchSpace& space,
                             std::span<const EntryIndex> holdout,
                             Exec exec = Exec::Parallel);

struct DistTuneResult {
  Threshold best_eta = Threshold::percentile(50.0);
  double best_score = 0.0;
  std::size_t evaluations = 0;
  std::vector<EntryIndex> holdout;
};

/// Validation loss for distributional threshold search.
enum class DistLoss {
  KsDistance,   // KS between imputed and held-out measures; failures cost 1
  AbsMeanError  // |mean difference|; failures cost the spread of cell means
};

/// Threshold search for the distributional estimators, over the percentile
/// grid of the method's axis. The reference for each holdout cell is its
/// held-out empirical measure.
DistTuneResult tune_dist(const DistMatrix& dm, MethodId method,
                         const EntryMetric& metric, const SearchSpace& space,
                         DistLoss loss = DistLoss::KsDistance, Exec exec = Exec::Parallel);

}  // namespace nnc
