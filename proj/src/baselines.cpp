#include "nnc/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nnc {

namespace {

Eigen::MatrixXd zero_filled(const MaskedMatrix& m) {
  Eigen::MatrixXd a(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t t = 0; t < m.cols(); ++t) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
          m.observed(i, t) ? m.at(i, t) : 0.0;
    }
  }
  return a;
}

std::vector<double> to_row_major(const Eigen::MatrixXd& a) {
  std::vector<double> out(static_cast<std::size_t>(a.rows() * a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index t = 0; t < a.cols(); ++t) {
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(a.cols()) +
          static_cast<std::size_t>(t)] = a(i, t);
    }
  }
  return out;
}

// soft-threshold the singular values by lambda; lambda = 0 is the identity so
// the no-shrinkage path introduces no SVD round-off
Eigen::MatrixXd svt(const Eigen::MatrixXd& y, double lambda) {
  if (lambda == 0.0) return y;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index k = 0; k < s.size(); ++k) s(k) = std::max(s(k) - lambda, 0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

std::vector<double> usvt(const MaskedMatrix& m, const SpectralParams& params) {
  if (!(params.usvt_eta > 0.0)) throw std::invalid_argument("usvt_eta must be positive");
  const Eigen::MatrixXd a = zero_filled(m);
  const double p_hat =
      static_cast<double>(m.observed_count()) / static_cast<double>(m.rows() * m.cols());
  const double tau =
      params.usvt_eta * std::sqrt(static_cast<double>(std::max(m.rows(), m.cols())) * p_hat);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) < tau) s(k) = 0.0;
  }
  Eigen::MatrixXd w = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  w /= p_hat;

  const auto [lo, hi] = m.observed_range();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index t = 0; t < w.cols(); ++t) {
      w(i, t) = std::clamp(w(i, t), lo, hi);
    }
  }
  return to_row_major(w);
}

std::vector<double> soft_impute(const MaskedMatrix& m, const SpectralParams& params,
                                const std::function<void(const std::vector<double>&)>& on_iterate) {
  if (params.si_lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (!(params.si_tol > 0.0)) throw std::invalid_argument("si_tol must be positive");
  if (params.si_max_iter < 1) throw std::invalid_argument("si_max_iter must be at least 1");

  const Eigen::MatrixXd z = zero_filled(m);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (int iter = 0; iter < params.si_max_iter; ++iter) {
    Eigen::MatrixXd y = x;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t t = 0; t < m.cols(); ++t) {
        if (m.observed(i, t)) {
          y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = m.at(i, t);
        }
      }
    }
    const Eigen::MatrixXd x_new = svt(y, params.si_lambda);
    const double denom = std::max(x.norm(), 1e-12);
    const double rel = (x_new - x).norm() / denom;
    x = x_new;
    if (on_iterate) on_iterate(to_row_major(x));
    if (rel < params.si_tol) break;
  }
  return to_row_major(x);
}

}  // namespace nnc
