#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnc/masked_matrix.hpp"
#include "nnc/types.hpp"

namespace nnc {

double sq_diff(double x, double y);

/// exp(-(x-y)^2 / (2 h^2)); throws NonPositiveBandwidth for h <= 0.
double gaussian_kernel(double x, double y, double bandwidth);

/// Unbiased MMD^2 between two sample sets under the Gaussian kernel:
///   (n(n-1))^-1 sum_{i!=j} k(a_i,a_j) + (m(m-1))^-1 sum_{i!=j} k(b_i,b_j)
///   - 2 (nm)^-1 sum_{i,j} k(a_i,b_j).
/// May be negative; negative values are kept (they still order neighbors
/// correctly and a floor would bias threshold calibration). Bit-exactly
/// symmetric in (a, b). Requires at least 2 samples on each side.
double mmd2_ustat(std::span<const double> a, std::span<const double> b, double bandwidth);

/// Squared Wasserstein-2 distance between the empirical measures of two
/// sample sequences. Quantile functions are evaluated on the common grid
/// u_k = (k - 0.5) / G, k = 1..G with G = max(|a|, |b|); for equal sizes this
/// is the mean squared difference of the sorted samples. Symmetric, >= 0.
double w2sq_hat(std::span<const double> a, std::span<const double> b);

/// Which scalar metric compares two cells, plus its parameterization.
struct EntryMetric {
  enum class Kind { SquaredDifference, MMD2, W2Squared };

  Kind kind = Kind::SquaredDifference;
  double bandwidth = 1.0;  // MMD2 only

  static EntryMetric squared_difference() { return {Kind::SquaredDifference, 1.0}; }
  static EntryMetric mmd2(double bandwidth);
  static EntryMetric w2_squared() { return {Kind::W2Squared, 1.0}; }
};

/// Finitely supported probability measure. Kept canonical: atoms sorted
/// ascending with exact duplicates merged; weights nonnegative and summing to
/// 1 within 1e-9.
class EmpiricalMeasure {
 public:
  static EmpiricalMeasure make(std::vector<double> atoms, std::vector<double> weights);
  static EmpiricalMeasure from_samples(std::span<const double> samples);
  static EmpiricalMeasure point(double x);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  double mean() const;
  /// Right-continuous CDF.
  double cdf(double x) const;
  /// Left-continuous quantile: smallest atom whose cumulative weight >= u.
  double quantile(double u) const;

 private:
  EmpiricalMeasure() = default;
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Kolmogorov-Smirnov distance: sup over x of |CDF_a(x) - CDF_b(x)|, taken at
/// the union of atom locations (the sup of a pair of step functions is
/// attained at a jump). Always in [0, 1].
double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Median of pairwise absolute differences over the pooled samples of every
/// observed cell; falls back to 1.0 when that median is zero. Pools at most
/// `sample_cap` values (deterministic stride subsample) so the heuristic stays
/// tractable on large matrices.
double median_heuristic_bandwidth(const DistMatrix& dm, std::size_t sample_cap = 2000);

}  // namespace nnc
