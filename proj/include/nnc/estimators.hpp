#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nnc/distance.hpp"
#include "nnc/masked_matrix.hpp"
#include "nnc/metrics.hpp"
#include "nnc/types.hpp"

namespace nnc {

enum class MethodId {
  RowNN,
  ColNN,
  TSNN,
  DRNN,
  AutoNN,
  AWNN,
  KernelNN,
  KernelNNCol,
  W2NN,
  W2NNCol,
};

std::string_view method_name(MethodId id);
MethodId method_from_string(std::string_view name);  // throws ConfigError on unknown names
bool is_distributional(MethodId id);

/// Neighborhood threshold, either an absolute dissimilarity value or a
/// percentile of the target's own profile (resolved per target, so percentile
/// thresholds adapt to the local distance scale).
struct Threshold {
  enum class Kind { Absolute, Percentile };

  Kind kind = Kind::Absolute;
  double value = 0.0;

  static Threshold absolute(double v) { return {Kind::Absolute, v}; }
  static Threshold percentile(double q);

  /// Absolute thresholds return their value; percentile thresholds resolve
  /// against the profile (NoDefinedDistances when nothing is defined).
  double resolve(const DissimilarityProfile& profile) const;
};

struct ScalarHyperParams {
  Threshold eta_row = Threshold::percentile(50.0);
  Threshold eta_col = Threshold::percentile(50.0);
  double alpha = 0.5;     // AutoNN mixing weight in [0, 1]
  double awnn_reg = 0.0;  // coefficient of sigma^2 ||v||^2; 0 selects 2 log(2N)
};

struct Estimate {
  double value = 0.0;
  bool fallback_used = false;
  int neighbor_count = 0;  // donors averaged; >= 1 whenever fallback_used is false
};

struct DistEstimate {
  EmpiricalMeasure value;
  bool fallback_used = false;
  int neighbor_count = 0;
};

// Row/column nearest neighbors. The neighborhood is every other row (column)
// whose dissimilarity to the target's row (column) is defined and at most
// eta; the estimate is the mean of the donors observed in the target column
// (row). When no neighbor has an observed donor entry, the closest defined
// one that does is used instead and the estimate is flagged fallback_used.
// Passing a PairwiseCache skips profile recomputation; cached and direct
// profiles are bit-identical.
Estimate impute_rownn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                      const PairwiseCache* row_cache = nullptr);
Estimate impute_colnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_col,
                      const PairwiseCache* col_cache = nullptr);

// Two-sided neighborhood: the product of the row and column neighborhoods,
// each including the target's own line at distance zero, averaged over the
// observed cells excluding the target cell itself.
Estimate impute_tsnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                     const Threshold& eta_col, const PairwiseCache* row_cache = nullptr,
                     const PairwiseCache* col_cache = nullptr);

// Doubly robust composite: RowNN + ColNN - TSNN. When the two-sided product
// neighborhood holds no observed cell the estimate degrades to
// 0.5 (RowNN + ColNN) and is flagged fallback_used.
Estimate impute_drnn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                     const Threshold& eta_col, const PairwiseCache* row_cache = nullptr,
                     const PairwiseCache* col_cache = nullptr);

// alpha DRNN + (1 - alpha) TSNN with shared thresholds; affine in alpha.
Estimate impute_autonn(const MaskedMatrix& m, EntryIndex target, const Threshold& eta_row,
                       const Threshold& eta_col, double alpha,
                       const PairwiseCache* row_cache = nullptr,
                       const PairwiseCache* col_cache = nullptr);

/// Adaptive weights for one target: the exact minimizer of
///   reg_log_term sigma2 ||v||^2 + sum_k v_k rho_k
/// over the simplex restricted to candidates with a defined dissimilarity and
/// an observed entry in the target column. Solved in closed form by sorting
/// and water-filling: v_k = max(0, c - rho_k / (2 reg_log_term sigma2)).
/// Weights are aligned with the profile slots (zero outside the candidate
/// set), nonincreasing in rho, and sum to 1.
struct WeightVector {
  std::vector<double> weights;
};

WeightVector awnn_weights(const DissimilarityProfile& profile,
                          std::span<const std::uint8_t> col_mask, double sigma2,
                          double reg_log_term);

struct AwnnOptions {
  int max_iter = 50;
  double tol = 1e-8;
  double reg_log_term = 0.0;  // 0 selects 2 log(2N)
  Exec exec = Exec::Parallel;
};

struct AwnnState {
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct AwnnBatch {
  // aligned with the requested targets; nullopt when a target's column has no
  // usable donor
  std::vector<std::optional<Estimate>> estimates;
  std::vector<WeightVector> weights;
  AwnnState state;
};

/// Adaptively weighted row NN over a batch of targets. The noise level is
/// estimated by a fixed point: start from the observed variance around the
/// global mean, estimate every observed entry with the current weights,
/// recompute sigma^2 from those residuals, and repeat until the change drops
/// below tol (sigma^2 is floored at 1e-12 throughout).
AwnnBatch impute_awnn(const MaskedMatrix& m, std::span<const EntryIndex> targets,
                      const AwnnOptions& opts = {});

/// Distributional row/column NN: thresholded neighbors under the given metric
/// and the matching barycenter over the donors' empirical measures (mixture
/// for MMD2, quantile average for W2Squared).
DistEstimate impute_dist_nn(const DistMatrix& dm, EntryIndex target, const Threshold& eta,
                            const EntryMetric& metric, Axis axis = Axis::Row,
                            const PairwiseCache* cache = nullptr);

/// Imputes each target independently (parallel over targets; results are
/// identical to the serial path). Targets whose neighborhoods fail even under
/// fallback come back as nullopt instead of aborting the batch.
std::vector<std::optional<Estimate>> batch_impute_scalar(const MaskedMatrix& m, MethodId method,
                                                         const ScalarHyperParams& params,
                                                         std::span<const EntryIndex> targets,
                                                         Exec exec = Exec::Parallel);

std::vector<std::optional<DistEstimate>> batch_impute_dist(const DistMatrix& dm, MethodId method,
                                                           const Threshold& eta,
                                                           const EntryMetric& metric,
                                                           std::span<const EntryIndex> targets,
                                                           Exec exec = Exec::Parallel);

}  // namespace nnc
