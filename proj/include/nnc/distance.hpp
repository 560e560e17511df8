#pragma once

#include <cstdint>
#include <vector>

#include "nnc/masked_matrix.hpp"
#include "nnc/metrics.hpp"
#include "nnc/types.hpp"

namespace nnc {

struct DissimilarityValue {
  double value = 0.0;
  bool defined = false;  // false when the two lines share no observed index
};

/// Dissimilarities from one row (or column) to every other one, with the
/// target's own slot skipped: slot k refers to index k when k < target and
/// k + 1 otherwise. Undefined slots have defined[k] == 0 and behave as +inf
/// for thresholding: a line with no shared observations can never qualify as
/// a neighbor.
struct DissimilarityProfile {
  Axis axis = Axis::Row;
  std::size_t target = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> defined;

  std::size_t size() const { return values.size(); }
  std::size_t index_of(std::size_t slot) const { return slot < target ? slot : slot + 1; }
  bool any_defined() const {
    for (auto d : defined) {
      if (d) return true;
    }
    return false;
  }
};

/// Mean entry-metric value over indices where both lines are observed, with
/// `exclude` always left out (the target column/row must not inform its own
/// distances). Computed as total-minus-excluded so that cached and direct
/// evaluations agree bit for bit. SquaredDifference and W2Squared results are
/// clamped at 0 (they are nonnegative in exact arithmetic); MMD2 may be
/// negative and is kept as is.
DissimilarityValue dissimilarity(const MaskedMatrix& m, Axis axis, std::size_t a, std::size_t b,
                                 std::size_t exclude,
                                 const EntryMetric& metric = EntryMetric::squared_difference());
DissimilarityValue dissimilarity(const DistMatrix& dm, Axis axis, std::size_t a, std::size_t b,
                                 std::size_t exclude, const EntryMetric& metric);

DissimilarityProfile dissimilarity_profile(
    const MaskedMatrix& m, Axis axis, std::size_t target, std::size_t exclude,
    const EntryMetric& metric = EntryMetric::squared_difference());
DissimilarityProfile dissimilarity_profile(const DistMatrix& dm, Axis axis, std::size_t target,
                                           std::size_t exclude, const EntryMetric& metric);

/// Nearest-rank percentile of the defined profile values: q = 0 gives the
/// minimum, q = 100 the maximum. Throws NoDefinedDistances when every slot is
/// undefined.
double percentile_to_threshold(const DissimilarityProfile& profile, double q);

/// Whether building a PairwiseCache pays for itself. The build touches every
/// line pair times the transverse length; direct per-target profiles cost one
/// line sweep per target. Cached and direct evaluation give identical doubles,
/// so this only trades time and memory. Very large axes are refused outright
/// to bound the cache's footprint.
inline bool cache_worthwhile(std::size_t axis_len, std::size_t transverse,
                             std::size_t n_targets) {
  if (axis_len < 2) return false;
  const double pairs = 0.5 * static_cast<double>(axis_len) * static_cast<double>(axis_len - 1);
  if (pairs > 3e7) return false;
  const double build_cost = pairs * static_cast<double>(transverse);
  return build_cost <= 2e8 || axis_len <= 2 * n_targets;
}

/// Precomputed pairwise overlap statistics along one axis. Holds, for every
/// line pair, the full-overlap metric sum and count; a query subtracts the
/// excluded index's term. Queries are bit-identical to direct dissimilarity()
/// calls. Building is the data-parallel kernel (one thread per line pair).
class PairwiseCache {
 public:
  static PairwiseCache build(const MaskedMatrix& m, Axis axis, Exec exec = Exec::Parallel);
  static PairwiseCache build(const DistMatrix& dm, Axis axis, const EntryMetric& metric,
                             Exec exec = Exec::Parallel);

  Axis axis() const { return axis_; }
  std::size_t axis_size() const { return n_; }

  DissimilarityValue query(std::size_t a, std::size_t b, std::size_t exclude) const;
  DissimilarityProfile profile(std::size_t target, std::size_t exclude) const;

 private:
  PairwiseCache() = default;
  std::size_t pair_index(std::size_t a, std::size_t b) const {
    // a < b over the strict upper triangle
    return a * (2 * n_ - a - 1) / 2 + (b - a - 1);
  }

  Axis axis_ = Axis::Row;
  EntryMetric metric_;
  bool scalar_ = true;
  std::size_t n_ = 0;  // lines along the axis
  std::size_t m_ = 0;  // transverse length
  std::vector<double> sum_;      // per pair, full-overlap metric sum
  std::vector<std::int32_t> cnt_;
  std::vector<double> vals_;     // scalar source, axis-major
  std::vector<std::uint8_t> msk_;
  std::vector<double> phi_;      // distributional: per-pair per-index metric
};

}  // namespace nnc
