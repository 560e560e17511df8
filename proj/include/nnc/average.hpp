#pragma once

#include <span>

#include "nnc/masked_matrix.hpp"
#include "nnc/metrics.hpp"
#include "nnc/types.hpp"

namespace nnc {

/// Weighted mean of the observed entries: sum_k w_k A_k Z_k / sum_k w_k A_k,
/// with w given row-major over the whole matrix. Weights must be nonnegative;
/// throws ZeroTotalWeight when no observed entry carries positive weight.
double weighted_scalar_average(std::span<const double> weights, const MaskedMatrix& m);

/// Weighted mixture of the given measures: atom weights are scaled by the
/// normalized mixture weights and merged. This is the minimizer of the
/// weighted sum of squared MMD distances over all probability measures.
EmpiricalMeasure mmd_barycenter(std::span<const double> weights,
                                std::span<const EmpiricalMeasure> measures);

/// Wasserstein-2 barycenter on the quantile grid u_k = (k - 0.5) / G with
/// G = max atom count among the inputs: atom k is the weighted average of the
/// input quantiles at u_k, each carrying mass 1/G.
EmpiricalMeasure w2_barycenter(std::span<const double> weights,
                               std::span<const EmpiricalMeasure> measures);

}  // namespace nnc
