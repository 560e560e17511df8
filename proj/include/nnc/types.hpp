#pragma once

#include <cstddef>
#include <stdexcept>

namespace nnc {

enum class Axis { Row, Col };

// Execution policy for the data-parallel kernels. Serial is the reference
// path; Parallel runs the same per-index work under OpenMP.
enum class Exec { Serial, Parallel };

struct EntryIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const EntryIndex&, const EntryIndex&) = default;
};

// row-major order
inline bool operator<(const EntryIndex& a, const EntryIndex& b) {
  return a.row != b.row ? a.row < b.row : a.col < b.col;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct AllMissing : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct EmptySample : Error { using Error::Error; };
struct EmptyMeasure : Error { using Error::Error; };
struct NonPositiveBandwidth : Error { using Error::Error; };
struct ZeroTotalWeight : Error { using Error::Error; };
struct NoObservedDonor : Error { using Error::Error; };
struct NonPositiveVariance : Error { using Error::Error; };
struct NoDefinedDistances : Error { using Error::Error; };
struct EmptySearchSpace : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct DuplicateEntry : Error { using Error::Error; };
struct RatingOutOfRange : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace nnc
