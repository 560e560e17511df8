#include "nnc/masked_matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nnc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

MaskedMatrix MaskedMatrix::build(std::vector<double> values, std::vector<std::uint8_t> mask,
                                 std::size_t n_rows, std::size_t n_cols) {
  if (n_rows == 0 || n_cols == 0) {
    throw DimensionMismatch("matrix dimensions must be positive");
  }
  const std::size_t cells = n_rows * n_cols;
  if (values.size() != cells || mask.size() != cells) {
    throw DimensionMismatch("values/mask size does not match " + std::to_string(n_rows) + "x" +
                            std::to_string(n_cols));
  }
  MaskedMatrix m;
  m.values_ = std::move(values);
  m.mask_ = std::move(mask);
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  for (std::size_t k = 0; k < cells; ++k) {
    if (m.mask_[k]) {
      m.mask_[k] = 1;
      ++m.observed_count_;
    } else {
      m.values_[k] = kNaN;
    }
  }
  if (m.observed_count_ == 0) throw AllMissing("matrix has no observed entries");
  return m;
}

MaskedMatrix MaskedMatrix::dense(std::vector<double> values, std::size_t n_rows,
                                 std::size_t n_cols) {
  return build(std::move(values), std::vector<std::uint8_t>(n_rows * n_cols, 1), n_rows, n_cols);
}

double MaskedMatrix::observed_mean() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (mask_[k]) sum += values_[k];
  }
  return sum / static_cast<double>(observed_count_);
}

std::pair<double, double> MaskedMatrix::observed_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!mask_[k]) continue;
    lo = std::min(lo, values_[k]);
    hi = std::max(hi, values_[k]);
  }
  return {lo, hi};
}

std::vector<EntryIndex> MaskedMatrix::observed_entries() const {
  std::vector<EntryIndex> out;
  out.reserve(observed_count_);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t t = 0; t < n_cols_; ++t) {
      if (mask_[i * n_cols_ + t]) out.push_back({i, t});
    }
  }
  return out;
}

MaskedMatrix MaskedMatrix::transposed() const {
  MaskedMatrix m;
  m.n_rows_ = n_cols_;
  m.n_cols_ = n_rows_;
  m.observed_count_ = observed_count_;
  m.values_.resize(values_.size());
  m.mask_.resize(mask_.size());
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t t = 0; t < n_cols_; ++t) {
      m.values_[t * n_rows_ + i] = values_[i * n_cols_ + t];
      m.mask_[t * n_rows_ + i] = mask_[i * n_cols_ + t];
    }
  }
  return m;
}

MaskedMatrix MaskedMatrix::with_masked(std::span<const EntryIndex> entries) const {
  MaskedMatrix m = *this;
  for (const EntryIndex& e : entries) {
    const std::size_t k = e.row * n_cols_ + e.col;
    if (m.mask_[k]) {
      m.mask_[k] = 0;
      m.values_[k] = kNaN;
      --m.observed_count_;
    }
  }
  if (m.observed_count_ == 0) throw AllMissing("masking removed every observed entry");
  return m;
}

DistMatrix DistMatrix::build(std::vector<std::vector<double>> samples,
                             std::vector<std::uint8_t> mask, std::size_t n_rows,
                             std::size_t n_cols) {
  if (n_rows == 0 || n_cols == 0) {
    throw DimensionMismatch("matrix dimensions must be positive");
  }
  const std::size_t cells = n_rows * n_cols;
  if (samples.size() != cells || mask.size() != cells) {
    throw DimensionMismatch("samples/mask size does not match " + std::to_string(n_rows) + "x" +
                            std::to_string(n_cols));
  }
  DistMatrix m;
  m.samples_ = std::move(samples);
  m.mask_ = std::move(mask);
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  for (std::size_t k = 0; k < cells; ++k) {
    if (m.mask_[k]) {
      m.mask_[k] = 1;
      if (m.samples_[k].size() < 2) {
        throw TooFewSamples("observed cell " + std::to_string(k / n_cols) + "," +
                            std::to_string(k % n_cols) + " holds fewer than 2 samples");
      }
      ++m.observed_count_;
    } else {
      m.samples_[k].clear();
    }
  }
  if (m.observed_count_ == 0) throw AllMissing("matrix has no observed entries");
  return m;
}

std::vector<EntryIndex> DistMatrix::observed_entries() const {
  std::vector<EntryIndex> out;
  out.reserve(observed_count_);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t t = 0; t < n_cols_; ++t) {
      if (mask_[i * n_cols_ + t]) out.push_back({i, t});
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> DistMatrix::sample_count_range() const {
  std::size_t lo = std::numeric_limits<std::size_t>::max();
  std::size_t hi = 0;
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    if (!mask_[k]) continue;
    lo = std::min(lo, samples_[k].size());
    hi = std::max(hi, samples_[k].size());
  }
  return {lo, hi};
}

DistMatrix DistMatrix::transposed() const {
  DistMatrix m;
  m.n_rows_ = n_cols_;
  m.n_cols_ = n_rows_;
  m.observed_count_ = observed_count_;
  m.samples_.resize(samples_.size());
  m.mask_.resize(mask_.size());
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t t = 0; t < n_cols_; ++t) {
      m.samples_[t * n_rows_ + i] = samples_[i * n_cols_ + t];
      m.mask_[t * n_rows_ + i] = mask_[i * n_cols_ + t];
    }
  }
  return m;
}

DistMatrix DistMatrix::with_masked(std::span<const EntryIndex> entries) const {
  DistMatrix m = *this;
  for (const EntryIndex& e : entries) {
    const std::size_t k = e.row * n_cols_ + e.col;
    if (m.mask_[k]) {
      m.mask_[k] = 0;
      m.samples_[k].clear();
      --m.observed_count_;
    }
  }
  if (m.observed_count_ == 0) throw AllMissing("masking removed every observed entry");
  return m;
}

}  // namespace nnc
