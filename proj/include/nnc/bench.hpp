#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnc/estimators.hpp"
#include "nnc/tuning.hpp"

namespace nnc {

/// |estimate - truth|; inputs must be finite.
inline double abs_error(double estimate, double truth) { return std::abs(estimate - truth); }

enum class Metric { AbsError, KsDistance };

std::string_view metric_name(Metric m);
Metric metric_from_string(std::string_view name);  // ConfigError on anything else

struct DatasetSpec {
  enum class Kind { SyntheticScalar, SyntheticDist, LongCsv, SamplesCsv, MovieLens };
  Kind kind = Kind::SyntheticScalar;
  std::string path;  // file-backed kinds only

  /// Accepts `synthetic-scalar`, `synthetic-dist`, `long-csv(PATH)`,
  /// `samples-csv(PATH)`, `movielens(PATH)`; ConfigError otherwise.
  static DatasetSpec parse(const std::string& text);
  std::string to_string() const;
};

struct BenchConfig {
  DatasetSpec dataset;
  std::vector<MethodId> estimators;
  Metric metric = Metric::AbsError;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  /// Fraction of observed entries held out for scoring, fresh per trial.
  double eval_fraction = 0.2;
  /// When nonempty, scores exactly these cells every trial instead of a
  /// seeded fraction (config key `eval_indices = row:col;row:col;...`). Each
  /// cell must be observed in the trial's matrix. Not available for the
  /// movielens protocol, which pins its own chronological split.
  std::vector<EntryIndex> eval_indices;
  std::string out = "bench_report.json";

  // synthetic generator knobs
  std::size_t n_rows = 50;
  std::size_t n_cols = 50;
  std::size_t rank = 4;
  double sigma = 0.1;
  double propensity = 0.5;
  std::size_t n_samples = 50;  // per-cell samples, synthetic-dist

  /// Shared by every tuned estimator; AWNN ignores it.
  SearchSpace search;

  // movielens protocol: tuning entries sampled from the chronologically first
  // 80% of ratings, scored entries from the last 20%
  std::size_t ml_cv_sample = 100;
  std::size_t ml_test_sample = 500;
};

/// Applies one `key = value` assignment (the config file grammar and the CLI
/// override flags share this). ConfigError on unknown keys or bad values.
void apply_config_key(BenchConfig& config, const std::string& key, const std::string& value);

/// Flat key-value file: `key = value` per line, blank lines and lines whose
/// first non-space character is '#' are skipped. ConfigError names the
/// offending line.
BenchConfig parse_config_file(const std::string& path);

struct EntryRecord {
  std::size_t trial = 0;
  MethodId method = MethodId::RowNN;
  EntryIndex entry;
  double error = 0.0;      // meaningless when failed
  bool fallback = false;
  bool failed = false;
};

struct TrialMethodSummary {
  std::size_t trial = 0;
  MethodId method = MethodId::RowNN;
  std::size_t n_entries = 0;
  std::size_t n_failed = 0;
  /// Mean metric over scored (non-failed) entries; empty when all failed.
  std::optional<double> mean_error;
  double std_error = 0.0;  // standard error of that mean; 0 when < 2 entries
  ScalarHyperParams tuned;  // dist methods store their threshold in the axis slot
  double tune_score = 0.0;
};

struct MethodSummary {
  MethodId method = MethodId::RowNN;
  std::optional<double> mean_of_trial_means;
  double se_over_trials = 0.0;
  std::size_t n_trials = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<EntryRecord> entries;          // (trial, estimator, entry) order
  std::vector<TrialMethodSummary> per_trial;  // same order
  std::vector<MethodSummary> overall;
  double runtime_seconds = 0.0;
  std::string timestamp;
};

/// Runs the whole experiment in memory. ConfigError for invalid configs
/// (including estimator/dataset kind mismatches); loader errors propagate.
BenchReport run(const BenchConfig& config);

/// JSON document for the report. Fully deterministic except for the "timing"
/// object, which carries the timestamp and wall-clock runtime; determinism
/// comparisons drop that one key.
std::string report_json(const BenchReport& report);

/// Per-entry flat CSV (`trial,estimator,row,col,error,fallback,failed`);
/// the error field is empty on failed entries. Deterministic.
std::string report_csv(const BenchReport& report);

/// Writes report_json to `report.config.out` and report_csv next to it (the
/// same path with its extension replaced by `.csv`). Returns the CSV path.
std::string write_report(const BenchReport& report);

}  // namespace nnc
