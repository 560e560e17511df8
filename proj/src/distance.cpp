#include "nnc/distance.hpp"

#include <algorithm>
#include <cmath>

#include "nnc/parallel.hpp"

namespace nnc {

namespace {

double entry_metric_samples(const EntryMetric& metric, std::span<const double> a,
                            std::span<const double> b) {
  switch (metric.kind) {
    case EntryMetric::Kind::MMD2:
      return mmd2_ustat(a, b, metric.bandwidth);
    case EntryMetric::Kind::W2Squared:
      return w2sq_hat(a, b);
    default:
      throw std::invalid_argument("sample sequences need a distributional metric");
  }
}

// total-minus-excluded assembly shared by every evaluation path
DissimilarityValue finish(double sum, std::int64_t cnt, double excl_phi, bool excl_both,
                          EntryMetric::Kind kind) {
  if (excl_both) {
    sum -= excl_phi;
    --cnt;
  }
  DissimilarityValue out;
  if (cnt <= 0) return out;
  out.defined = true;
  out.value = sum / static_cast<double>(cnt);
  if (kind != EntryMetric::Kind::MMD2 && out.value < 0.0) out.value = 0.0;
  return out;
}

}  // namespace

DissimilarityValue dissimilarity(const MaskedMatrix& m, Axis axis, std::size_t a, std::size_t b,
                                 std::size_t exclude, const EntryMetric& metric) {
  if (metric.kind != EntryMetric::Kind::SquaredDifference) {
    throw std::invalid_argument("scalar matrices support only the squared-difference metric");
  }
  const bool row = axis == Axis::Row;
  const std::size_t len = row ? m.cols() : m.rows();
  double sum = 0.0;
  std::int64_t cnt = 0;
  for (std::size_t s = 0; s < len; ++s) {
    const bool oa = row ? m.observed(a, s) : m.observed(s, a);
    const bool ob = row ? m.observed(b, s) : m.observed(s, b);
    if (oa && ob) {
      const double xa = row ? m.at(a, s) : m.at(s, a);
      const double xb = row ? m.at(b, s) : m.at(s, b);
      sum += sq_diff(xa, xb);
      ++cnt;
    }
  }
  bool excl_both = false;
  double excl_phi = 0.0;
  if (exclude < len) {
    const bool oa = row ? m.observed(a, exclude) : m.observed(exclude, a);
    const bool ob = row ? m.observed(b, exclude) : m.observed(exclude, b);
    if (oa && ob) {
      excl_both = true;
      const double xa = row ? m.at(a, exclude) : m.at(exclude, a);
      const double xb = row ? m.at(b, exclude) : m.at(exclude, b);
      excl_phi = sq_diff(xa, xb);
    }
  }
  return finish(sum, cnt, excl_phi, excl_both, metric.kind);
}

DissimilarityValue dissimilarity(const DistMatrix& dm, Axis axis, std::size_t a, std::size_t b,
                                 std::size_t exclude, const EntryMetric& metric) {
  const bool row = axis == Axis::Row;
  const std::size_t len = row ? dm.cols() : dm.rows();
  double sum = 0.0;
  std::int64_t cnt = 0;
  bool excl_both = false;
  double excl_phi = 0.0;
  for (std::size_t s = 0; s < len; ++s) {
    const bool oa = row ? dm.observed(a, s) : dm.observed(s, a);
    const bool ob = row ? dm.observed(b, s) : dm.observed(s, b);
    if (!(oa && ob)) continue;
    const auto sa = row ? dm.samples_at(a, s) : dm.samples_at(s, a);
    const auto sb = row ? dm.samples_at(b, s) : dm.samples_at(s, b);
    const double phi = entry_metric_samples(metric, sa, sb);
    sum += phi;
    ++cnt;
    if (s == exclude) {
      excl_both = true;
      excl_phi = phi;
    }
  }
  return finish(sum, cnt, excl_phi, excl_both, metric.kind);
}

namespace {

template <class Matrix>
DissimilarityProfile profile_direct(const Matrix& m, Axis axis, std::size_t target,
                                    std::size_t exclude, const EntryMetric& metric) {
  const std::size_t n = axis == Axis::Row ? m.rows() : m.cols();
  DissimilarityProfile p;
  p.axis = axis;
  p.target = target;
  p.values.resize(n - 1, 0.0);
  p.defined.resize(n - 1, 0);
  for (std::size_t slot = 0; slot < n - 1; ++slot) {
    const std::size_t other = p.index_of(slot);
    const DissimilarityValue d = dissimilarity(m, axis, target, other, exclude, metric);
    p.values[slot] = d.value;
    p.defined[slot] = d.defined ? 1 : 0;
  }
  return p;
}

// Scalar profiles iterate only the target line's observed entries, so sparse
// tall matrices don't pay a full dense scan per pair. The accumulation visits
// the same both-observed indices in the same ascending order as the pair form,
// so the two produce identical doubles.
DissimilarityProfile profile_direct(const MaskedMatrix& m, Axis axis, std::size_t target,
                                    std::size_t exclude, const EntryMetric& metric) {
  if (metric.kind != EntryMetric::Kind::SquaredDifference) {
    throw std::invalid_argument("scalar matrices support only the squared-difference metric");
  }
  const bool row = axis == Axis::Row;
  const std::size_t n = row ? m.rows() : m.cols();
  const std::size_t len = row ? m.cols() : m.rows();
  std::vector<std::size_t> idx;  // target's observed transverse indices, ascending
  std::vector<double> tv;
  for (std::size_t s = 0; s < len; ++s) {
    const bool obs = row ? m.observed(target, s) : m.observed(s, target);
    if (obs) {
      idx.push_back(s);
      tv.push_back(row ? m.at(target, s) : m.at(s, target));
    }
  }
  DissimilarityProfile p;
  p.axis = axis;
  p.target = target;
  p.values.resize(n - 1, 0.0);
  p.defined.resize(n - 1, 0);
  for (std::size_t slot = 0; slot < n - 1; ++slot) {
    const std::size_t other = p.index_of(slot);
    double sum = 0.0;
    std::int64_t cnt = 0;
    bool excl_both = false;
    double excl_phi = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t s = idx[k];
      const bool ob = row ? m.observed(other, s) : m.observed(s, other);
      if (!ob) continue;
      const double phi = sq_diff(tv[k], row ? m.at(other, s) : m.at(s, other));
      sum += phi;
      ++cnt;
      if (s == exclude) {
        excl_both = true;
        excl_phi = phi;
      }
    }
    const DissimilarityValue d = finish(sum, cnt, excl_phi, excl_both, metric.kind);
    p.values[slot] = d.value;
    p.defined[slot] = d.defined ? 1 : 0;
  }
  return p;
}

}  // namespace

DissimilarityProfile dissimilarity_profile(const MaskedMatrix& m, Axis axis, std::size_t target,
                                           std::size_t exclude, const EntryMetric& metric) {
  return profile_direct(m, axis, target, exclude, metric);
}

DissimilarityProfile dissimilarity_profile(const DistMatrix& dm, Axis axis, std::size_t target,
                                           std::size_t exclude, const EntryMetric& metric) {
  return profile_direct(dm, axis, target, exclude, metric);
}

double percentile_to_threshold(const DissimilarityProfile& profile, double q) {
  if (q < 0.0 || q > 100.0) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::vector<double> vals;
  vals.reserve(profile.size());
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (profile.defined[k]) vals.push_back(profile.values[k]);
  }
  if (vals.empty()) throw NoDefinedDistances("profile has no defined dissimilarities");
  std::sort(vals.begin(), vals.end());
  const double n = static_cast<double>(vals.size());
  // nearest rank; the 1e-9 guard keeps exact integer ranks from drifting up
  // through floating-point round-off
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * n / 100.0 - 1e-9));
  rank = std::max<std::size_t>(rank, 1);
  rank = std::min(rank, vals.size());
  return vals[rank - 1];
}

PairwiseCache PairwiseCache::build(const MaskedMatrix& m, Axis axis, Exec exec) {
  PairwiseCache c;
  c.axis_ = axis;
  c.metric_ = EntryMetric::squared_difference();
  c.scalar_ = true;
  c.n_ = axis == Axis::Row ? m.rows() : m.cols();
  c.m_ = axis == Axis::Row ? m.cols() : m.rows();
  c.vals_.resize(c.n_ * c.m_);
  c.msk_.resize(c.n_ * c.m_);
  for (std::size_t a = 0; a < c.n_; ++a) {
    for (std::size_t s = 0; s < c.m_; ++s) {
      const std::size_t i = axis == Axis::Row ? a : s;
      const std::size_t t = axis == Axis::Row ? s : a;
      c.vals_[a * c.m_ + s] = m.at(i, t);
      c.msk_[a * c.m_ + s] = m.observed(i, t) ? 1 : 0;
    }
  }
  const std::size_t pairs = c.n_ * (c.n_ - 1) / 2;
  c.sum_.resize(pairs, 0.0);
  c.cnt_.resize(pairs, 0);
  parallel_for(c.n_, exec, [&](std::size_t a) {
    for (std::size_t b = a + 1; b < c.n_; ++b) {
      const double* va = &c.vals_[a * c.m_];
      const double* vb = &c.vals_[b * c.m_];
      const std::uint8_t* ma = &c.msk_[a * c.m_];
      const std::uint8_t* mb = &c.msk_[b * c.m_];
      double sum = 0.0;
      std::int32_t cnt = 0;
      for (std::size_t s = 0; s < c.m_; ++s) {
        if (ma[s] && mb[s]) {
          sum += sq_diff(va[s], vb[s]);
          ++cnt;
        }
      }
      const std::size_t p = c.pair_index(a, b);
      c.sum_[p] = sum;
      c.cnt_[p] = cnt;
    }
  });
  return c;
}

PairwiseCache PairwiseCache::build(const DistMatrix& dm, Axis axis, const EntryMetric& metric,
                                   Exec exec) {
  if (metric.kind == EntryMetric::Kind::SquaredDifference) {
    throw std::invalid_argument("distributional matrices need mmd2 or w2 metrics");
  }
  PairwiseCache c;
  c.axis_ = axis;
  c.metric_ = metric;
  c.scalar_ = false;
  c.n_ = axis == Axis::Row ? dm.rows() : dm.cols();
  c.m_ = axis == Axis::Row ? dm.cols() : dm.rows();
  c.msk_.resize(c.n_ * c.m_);
  for (std::size_t a = 0; a < c.n_; ++a) {
    for (std::size_t s = 0; s < c.m_; ++s) {
      const std::size_t i = axis == Axis::Row ? a : s;
      const std::size_t t = axis == Axis::Row ? s : a;
      c.msk_[a * c.m_ + s] = dm.observed(i, t) ? 1 : 0;
    }
  }
  const std::size_t pairs = c.n_ * (c.n_ - 1) / 2;
  c.sum_.resize(pairs, 0.0);
  c.cnt_.resize(pairs, 0);
  c.phi_.resize(pairs * c.m_, 0.0);
  parallel_for(c.n_, exec, [&](std::size_t a) {
    for (std::size_t b = a + 1; b < c.n_; ++b) {
      const std::size_t p = c.pair_index(a, b);
      double sum = 0.0;
      std::int32_t cnt = 0;
      for (std::size_t s = 0; s < c.m_; ++s) {
        if (!(c.msk_[a * c.m_ + s] && c.msk_[b * c.m_ + s])) continue;
        const std::size_t i1 = axis == Axis::Row ? a : s;
        const std::size_t t1 = axis == Axis::Row ? s : a;
        const std::size_t i2 = axis == Axis::Row ? b : s;
        const std::size_t t2 = axis == Axis::Row ? s : b;
        const double phi =
            entry_metric_samples(metric, dm.samples_at(i1, t1), dm.samples_at(i2, t2));
        c.phi_[p * c.m_ + s] = phi;
        sum += phi;
        ++cnt;
      }
      c.sum_[p] = sum;
      c.cnt_[p] = cnt;
    }
  });
  return c;
}

DissimilarityValue PairwiseCache::query(std::size_t a, std::size_t b, std::size_t exclude) const {
  if (a == b) throw std::invalid_argument("dissimilarity of a line with itself is not defined");
  const std::size_t lo = std::min(a, b), hi = std::max(a, b);
  const std::size_t p = pair_index(lo, hi);
  bool excl_both = false;
  double excl_phi = 0.0;
  if (exclude < m_ && msk_[lo * m_ + exclude] && msk_[hi * m_ + exclude]) {
    excl_both = true;
    excl_phi = scalar_ ? sq_diff(vals_[lo * m_ + exclude], vals_[hi * m_ + exclude])
                       : phi_[p * m_ + exclude];
  }
  return finish(sum_[p], cnt_[p], excl_phi, excl_both, metric_.kind);
}

DissimilarityProfile PairwiseCache::profile(std::size_t target, std::size_t exclude) const {
  DissimilarityProfile prof;
  prof.axis = axis_;
  prof.target = target;
  prof.values.resize(n_ - 1, 0.0);
  prof.defined.resize(n_ - 1, 0);
  for (std::size_t slot = 0; slot < n_ - 1; ++slot) {
    const DissimilarityValue d = query(target, prof.index_of(slot), exclude);
    prof.values[slot] = d.value;
    prof.defined[slot] = d.defined ? 1 : 0;
  }
  return prof;
}

}  // namespace nnc
