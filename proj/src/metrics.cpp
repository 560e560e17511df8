#include "nnc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnc {

double sq_diff(double x, double y) {
  const double d = x - y;
  return d * d;
}

double gaussian_kernel(double x, double y, double bandwidth) {
  if (!(bandwidth > 0.0)) throw NonPositiveBandwidth("kernel bandwidth must be positive");
  const double d = x - y;
  return std::exp(-(d * d) / (2.0 * bandwidth * bandwidth));
}

namespace {

double mean_pairwise_kernel(std::span<const double> v, double h) {
  // within-set part of the U-statistic: 2/(n(n-1)) * sum_{i<j} k(v_i, v_j)
  const std::size_t n = v.size();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += gaussian_kernel(v[i], v[j], h);
  }
  return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double mean_cross_kernel(std::span<const double> a, std::span<const double> b, double h) {
  double s = 0.0;
  for (double x : a) {
    for (double y : b) s += gaussian_kernel(x, y, h);
  }
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double mmd2_ustat(std::span<const double> a, std::span<const double> b, double bandwidth) {
  if (a.size() < 2 || b.size() < 2) {
    throw TooFewSamples("mmd2 needs at least 2 samples on each side");
  }
  // Canonical operand order makes the cross term, and hence the whole value,
  // bit-exactly symmetric in (a, b).
  if (b.size() < a.size() ||
      (a.size() == b.size() &&
       std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()))) {
    std::swap(a, b);
  }
  return mean_pairwise_kernel(a, bandwidth) + mean_pairwise_kernel(b, bandwidth) -
         2.0 * mean_cross_kernel(a, b, bandwidth);
}

double w2sq_hat(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptySample("w2sq needs a nonempty sample on each side");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  const std::size_t g = std::max(na, nb);
  double s = 0.0;
  for (std::size_t k = 1; k <= g; ++k) {
    // empirical quantile at u = (2k-1)/(2g): index ceil(u*n), in exact
    // integer arithmetic
    const std::size_t ia = ((2 * k - 1) * na + 2 * g - 1) / (2 * g);
    const std::size_t ib = ((2 * k - 1) * nb + 2 * g - 1) / (2 * g);
    const double d = sa[ia - 1] - sb[ib - 1];
    s += d * d;
  }
  return s / static_cast<double>(g);
}

EntryMetric EntryMetric::mmd2(double bandwidth) {
  if (!(bandwidth > 0.0)) throw NonPositiveBandwidth("mmd2 bandwidth must be positive");
  return {Kind::MMD2, bandwidth};
}

EmpiricalMeasure EmpiricalMeasure::make(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty()) throw EmptyMeasure("measure needs at least one atom");
  if (atoms.size() != weights.size()) {
    throw DimensionMismatch("atom/weight length mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error("measure weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("measure weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  std::vector<std::size_t> order(atoms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });
  EmpiricalMeasure m;
  for (std::size_t idx : order) {
    if (!m.atoms_.empty() && m.atoms_.back() == atoms[idx]) {
      m.weights_.back() += weights[idx];
    } else {
      m.atoms_.push_back(atoms[idx]);
      m.weights_.push_back(weights[idx]);
    }
  }
  return m;
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::span<const double> samples) {
  if (samples.empty()) throw EmptySample("cannot build a measure from zero samples");
  const double w = 1.0 / static_cast<double>(samples.size());
  return make(std::vector<double>(samples.begin(), samples.end()),
              std::vector<double>(samples.size(), w));
}

EmpiricalMeasure EmpiricalMeasure::point(double x) { return make({x}, {1.0}); }

double EmpiricalMeasure::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) s += atoms_[i] * weights_[i];
  return s;
}

double EmpiricalMeasure::cdf(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size() && atoms_[i] <= x; ++i) s += weights_[i];
  return s;
}

double EmpiricalMeasure::quantile(double u) const {
  double cum = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    cum += weights_[i];
    if (cum >= u) return atoms_[i];
  }
  return atoms_.back();
}

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::size_t i = 0, j = 0;
  double ca = 0.0, cb = 0.0, sup = 0.0;
  while (i < a.size() || j < b.size()) {
    const double xa = i < a.size() ? a.atoms()[i] : kInf;
    const double xb = j < b.size() ? b.atoms()[j] : kInf;
    const double x = std::min(xa, xb);
    while (i < a.size() && a.atoms()[i] == x) ca += a.weights()[i++];
    while (j < b.size() && b.atoms()[j] == x) cb += b.weights()[j++];
    sup = std::max(sup, std::abs(ca - cb));
  }
  return sup;
}

double median_heuristic_bandwidth(const DistMatrix& dm, std::size_t sample_cap) {
  std::vector<double> pooled;
  std::size_t total = 0;
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    for (std::size_t t = 0; t < dm.cols(); ++t) total += dm.samples_at(i, t).size();
  }
  if (total == 0) throw EmptySample("no samples to derive a bandwidth from");
  const std::size_t stride = std::max<std::size_t>(1, (total + sample_cap - 1) / sample_cap);
  std::size_t k = 0;
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    for (std::size_t t = 0; t < dm.cols(); ++t) {
      for (double x : dm.samples_at(i, t)) {
        if (k % stride == 0) pooled.push_back(x);
        ++k;
      }
    }
  }
  std::vector<double> diffs;
  diffs.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      diffs.push_back(std::abs(pooled[i] - pooled[j]));
    }
  }
  if (diffs.empty()) return 1.0;
  const std::size_t mid = diffs.size() / 2;
  std::nth_element(diffs.begin(), diffs.begin() + mid, diffs.end());
  double med = diffs[mid];
  if (diffs.size() % 2 == 0) {
    // lower-middle / upper-middle average for even counts
    const double hi = med;
    std::nth_element(diffs.begin(), diffs.begin() + (mid - 1), diffs.begin() + mid);
    med = 0.5 * (diffs[mid - 1] + hi);
  }
  return med > 0.0 ? med : 1.0;
}

}  // namespace nnc
