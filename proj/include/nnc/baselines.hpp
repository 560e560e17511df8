#pragma once

#include <functional>
#include <vector>

#include "nnc/masked_matrix.hpp"

namespace nnc {

struct SpectralParams {
  double usvt_eta = 2.02;  // singular-value threshold multiplier
  double si_lambda = 1.0;  // nuclear-norm penalty
  int si_max_iter = 200;
  double si_tol = 1e-6;  // relative Frobenius change at which iteration stops
};

/// Universal singular value thresholding. Fills unobserved entries with 0,
/// keeps singular values >= usvt_eta * sqrt(max(N,T) * p_hat) where p_hat is
/// the observed fraction, rescales the reconstruction by 1 / p_hat, and clips
/// every entry to the observed value range. Returns the completed matrix
/// row-major.
std::vector<double> usvt(const MaskedMatrix& m, const SpectralParams& params = {});

/// SoftImpute by soft-thresholded SVD iteration:
///   X <- SVT_lambda(P_obs(Z) + P_miss(X)),  X_0 = 0,
/// stopping when the relative Frobenius change drops below si_tol or after
/// si_max_iter iterations. The surrogate objective
///   0.5 * ||P_obs(Z - X)||_F^2 + lambda * ||X||_*
/// is nonincreasing across iterations. At lambda = 0 the thresholding is the
/// identity (no SVD round-trip), so a fully observed matrix comes back bit
/// for bit. `on_iterate`, when set, receives every iterate row-major; tests
/// use it to audit the objective with an independent evaluator.
std::vector<double> soft_impute(
    const MaskedMatrix& m, const SpectralParams& params = {},
    const std::function<void(const std::vector<double>&)>& on_iterate = {});

}  // namespace nnc
