#include "nnc/average.hpp"

#include <algorithm>
#include <stdexcept>

namespace nnc {

double weighted_scalar_average(std::span<const double> weights, const MaskedMatrix& m) {
  if (weights.size() != m.rows() * m.cols()) {
    throw DimensionMismatch("weight vector does not match the matrix layout");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    if (w < 0.0) throw std::invalid_argument("weights must be nonnegative");
    if (w > 0.0 && m.mask()[k]) {
      num += w * m.values()[k];
      den += w;
    }
  }
  if (den <= 0.0) throw ZeroTotalWeight("no observed entry carries positive weight");
  return num / den;
}

namespace {

std::vector<double> normalized(std::span<const double> weights, std::size_t expected) {
  if (weights.size() != expected) {
    throw DimensionMismatch("one weight per measure is required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weights must be nonnegative");
    total += w;
  }
  if (total <= 0.0) throw ZeroTotalWeight("mixture weights sum to zero");
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

}  // namespace

EmpiricalMeasure mmd_barycenter(std::span<const double> weights,
                                std::span<const EmpiricalMeasure> measures) {
  if (measures.empty()) throw EmptyMeasure("barycenter of zero measures");
  const std::vector<double> wn = normalized(weights, measures.size());
  std::vector<double> atoms;
  std::vector<double> mass;
  for (std::size_t j = 0; j < measures.size(); ++j) {
    if (wn[j] == 0.0) continue;
    for (std::size_t k = 0; k < measures[j].size(); ++k) {
      atoms.push_back(measures[j].atoms()[k]);
      mass.push_back(wn[j] * measures[j].weights()[k]);
    }
  }
  return EmpiricalMeasure::make(std::move(atoms), std::move(mass));
}

EmpiricalMeasure w2_barycenter(std::span<const double> weights,
                               std::span<const EmpiricalMeasure> measures) {
  if (measures.empty()) throw EmptyMeasure("barycenter of zero measures");
  const std::vector<double> wn = normalized(weights, measures.size());
  std::size_t g = 0;
  for (const auto& m : measures) g = std::max(g, m.size());
  std::vector<double> atoms(g, 0.0);
  for (std::size_t k = 1; k <= g; ++k) {
    const double u = (2.0 * static_cast<double>(k) - 1.0) / (2.0 * static_cast<double>(g));
    double q = 0.0;
    for (std::size_t j = 0; j < measures.size(); ++j) {
      if (wn[j] > 0.0) q += wn[j] * measures[j].quantile(u);
    }
    atoms[k - 1] = q;
  }
  return EmpiricalMeasure::make(std::move(atoms),
                                std::vector<double>(g, 1.0 / static_cast<double>(g)));
}

}  // namespace nnc
