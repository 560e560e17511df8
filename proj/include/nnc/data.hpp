#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnc/masked_matrix.hpp"

namespace nnc {

struct SyntheticSpec {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::size_t rank = 4;
  double noise_sd = 0.0;     // sigma >= 0
  double propensity = 1.0;   // observation probability, in (0, 1]
  std::size_t sample_count = 2;  // samples per observed cell (distributional)
  std::uint64_t seed = 0;
  /// When set, replaces the factor product with this constant at every entry.
  /// The factor draws still happen, so the noise, mask, and sample streams
  /// are unchanged by the override.
  std::optional<double> theta_const;
};

struct ScalarGroundTruth {
  std::vector<double> theta;  // row-major N x T signal, defined at every cell
  MaskedMatrix matrix;
};

struct DistGroundTruth {
  std::vector<double> theta;
  DistMatrix matrix;
};

/// Linear factor model: u_i, v_t in R^rank with i.i.d. uniform[-0.5, 0.5]
/// coordinates, theta = u.v, Z = theta + Normal(0, sigma^2) noise, cells kept
/// with probability `propensity`. The random stream is consumed in a fixed
/// order - row factors, column factors, noise (row-major), mask (row-major) -
/// so theta (and the mask) are identical across sigma values for a fixed
/// seed. All randomness is generated by pinned integer arithmetic on
/// mt19937_64 output, so results are reproducible across platforms.
ScalarGroundTruth gen_synthetic_scalar(const SyntheticSpec& spec);

/// Same signal law, but each observed cell holds `sample_count` i.i.d. draws
/// from Normal(theta, sigma^2). Sample draws follow the mask draws in the
/// stream, row-major over observed cells only.
DistGroundTruth gen_synthetic_dist(const SyntheticSpec& spec);

struct LongCsv {
  MaskedMatrix matrix;
  /// Original identifiers, indexed by matrix row / column. Rows and columns
  /// are numbered by first appearance in the file.
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

/// Long-format loader: header `row_id,col_id,value`, one record per observed
/// entry, cells never mentioned are masked. Malformed records raise
/// ParseError with the line number; a repeated (row_id, col_id) raises
/// DuplicateEntry naming both lines.
LongCsv load_long_csv(const std::string& path);

/// Writes observed entries row-major in the same long format, values printed
/// in shortest round-trip form, so load(write(m)) reproduces `m` exactly.
/// Identifier vectors default to decimal indices when empty.
void write_long_csv(const MaskedMatrix& m, const std::string& path,
                    const std::vector<std::string>& row_ids = {},
                    const std::vector<std::string>& col_ids = {});

struct SamplesCsv {
  DistMatrix matrix;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

/// Per-sample long loader: header `row_id,col_id,sample_idx,value`. A cell's
/// samples are ordered by sample_idx (any nonnegative integers, duplicates
/// rejected); every mentioned cell needs at least 2 samples.
SamplesCsv load_samples_csv(const std::string& path);

struct MovieLensData {
  MaskedMatrix matrix;  // users x movies over the full id ranges
  /// Per-cell rating timestamps, row-major, -1 where unobserved.
  std::vector<std::int64_t> timestamps;
};

/// Reads a ratings file of `UserID::MovieID::Rating::Timestamp` records into
/// the fixed 6040 x 3952 user-movie pivot. Ratings outside {1..5} raise
/// RatingOutOfRange; ids outside the pivot raise ParseError.
MovieLensData load_movielens(const std::string& path);

}  // namespace nnc
