#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nnc/types.hpp"

namespace nnc {

/// Dense N x T real matrix with an observation mask. Masked cells are
/// normalized to quiet NaN so that any code path that reads a value without
/// consulting the mask poisons its output instead of silently using stale
/// data. All arithmetic in the library branches on the mask, never on the
/// sentinel.
class MaskedMatrix {
 public:
  static MaskedMatrix build(std::vector<double> values, std::vector<std::uint8_t> mask,
                            std::size_t n_rows, std::size_t n_cols);
  /// Fully observed matrix.
  static MaskedMatrix dense(std::vector<double> values, std::size_t n_rows, std::size_t n_cols);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  bool observed(std::size_t i, std::size_t t) const { return mask_[i * n_cols_ + t] != 0; }
  /// Raw cell value; NaN when the cell is masked.
  double at(std::size_t i, std::size_t t) const { return values_[i * n_cols_ + t]; }

  std::size_t observed_count() const { return observed_count_; }
  double observed_mean() const;
  /// (min, max) over observed values.
  std::pair<double, double> observed_range() const;
  std::vector<EntryIndex> observed_entries() const;

  MaskedMatrix transposed() const;
  /// Copy with the given (observed or not) entries masked out.
  MaskedMatrix with_masked(std::span<const EntryIndex> entries) const;

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

 private:
  MaskedMatrix() = default;

  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::size_t observed_count_ = 0;
};

/// N x T matrix whose observed entries hold sample sequences (one empirical
/// measure per cell). Observed cells carry at least 2 samples; unobserved
/// cells hold empty sequences.
class DistMatrix {
 public:
  static DistMatrix build(std::vector<std::vector<double>> samples,
                          std::vector<std::uint8_t> mask, std::size_t n_rows,
                          std::size_t n_cols);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  bool observed(std::size_t i, std::size_t t) const { return mask_[i * n_cols_ + t] != 0; }
  std::span<const double> samples_at(std::size_t i, std::size_t t) const {
    return samples_[i * n_cols_ + t];
  }

  std::size_t observed_count() const { return observed_count_; }
  std::vector<EntryIndex> observed_entries() const;
  /// (min, max) sample count over observed cells.
  std::pair<std::size_t, std::size_t> sample_count_range() const;

  DistMatrix transposed() const;
  DistMatrix with_masked(std::span<const EntryIndex> entries) const;

  const std::vector<std::uint8_t>& mask() const { return mask_; }

 private:
  DistMatrix() = default;

  std::vector<std::vector<double>> samples_;
  std::vector<std::uint8_t> mask_;
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::size_t observed_count_ = 0;
};

}  // namespace nnc
