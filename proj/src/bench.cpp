#include "nnc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "nnc/data.hpp"
#include "nnc/metrics.hpp"
#include "nnc/version.hpp"

namespace nnc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t config_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
  }
  return v;
}

double config_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t pos = value.find(sep, start);
    const std::string item =
        trim(pos == std::string::npos ? value.substr(start) : value.substr(start, pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<EntryIndex> parse_entry_list(const std::string& key, const std::string& value) {
  std::vector<EntryIndex> out;
  for (const std::string& item : split_list(value, ';')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(key + ": expected row:col pairs separated by ';', got '" + item + "'");
    }
    out.push_back({config_u64(key, trim(item.substr(0, colon))),
                   config_u64(key, trim(item.substr(colon + 1)))});
  }
  return out;
}

std::vector<double> config_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) out.push_back(config_double(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of numbers");
  return out;
}

}  // namespace

std::string_view metric_name(Metric m) {
  return m == Metric::AbsError ? "abs_error" : "ks_distance";
}

Metric metric_from_string(std::string_view name) {
  if (name == "abs_error") return Metric::AbsError;
  if (name == "ks_distance") return Metric::KsDistance;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

DatasetSpec DatasetSpec::parse(const std::string& text) {
  DatasetSpec spec;
  const auto open = text.find('(');
  std::string name = text;
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError("dataset: missing ')' in '" + text + "'");
    name = text.substr(0, open);
    spec.path = text.substr(open + 1, text.size() - open - 2);
    if (spec.path.empty()) throw ConfigError("dataset: empty path in '" + text + "'");
  }
  if (name == "synthetic-scalar") {
    spec.kind = Kind::SyntheticScalar;
  } else if (name == "synthetic-dist") {
    spec.kind = Kind::SyntheticDist;
  } else if (name == "long-csv") {
    spec.kind = Kind::LongCsv;
  } else if (name == "samples-csv") {
    spec.kind = Kind::SamplesCsv;
  } else if (name == "movielens") {
    spec.kind = Kind::MovieLens;
  } else {
    throw ConfigError("unknown dataset '" + text + "'");
  }
  const bool needs_path = spec.kind != Kind::SyntheticScalar && spec.kind != Kind::SyntheticDist;
  if (needs_path && spec.path.empty()) {
    throw ConfigError("dataset '" + name + "' needs a path, e.g. " + name + "(data/file.csv)");
  }
  if (!needs_path && !spec.path.empty()) {
    throw ConfigError("dataset '" + name + "' does not take a path");
  }
  return spec;
}

std::string DatasetSpec::to_string() const {
  switch (kind) {
    case Kind::SyntheticScalar:
      return "synthetic-scalar";
    case Kind::SyntheticDist:
      return "synthetic-dist";
    case Kind::LongCsv:
      return "long-csv(" + path + ")";
    case Kind::SamplesCsv:
      return "samples-csv(" + path + ")";
    default:
      return "movielens(" + path + ")";
  }
}

void apply_config_key(BenchConfig& config, const std::string& key, const std::string& value) {
  if (key == "dataset") {
    config.dataset = DatasetSpec::parse(value);
  } else if (key == "estimators") {
    config.estimators.clear();
    for (const std::string& item : split_list(value)) {
      config.estimators.push_back(method_from_string(item));
    }
  } else if (key == "metric") {
    config.metric = metric_from_string(value);
  } else if (key == "trials") {
    config.trials = config_u64(key, value);
  } else if (key == "seed") {
    config.seed = config_u64(key, value);
  } else if (key == "eval_fraction") {
    config.eval_fraction = config_double(key, value);
  } else if (key == "eval_indices") {
    config.eval_indices = parse_entry_list(key, value);
  } else if (key == "out") {
    config.out = value;
  } else if (key == "n_rows") {
    config.n_rows = config_u64(key, value);
  } else if (key == "n_cols") {
    config.n_cols = config_u64(key, value);
  } else if (key == "rank") {
    config.rank = config_u64(key, value);
  } else if (key == "sigma") {
    config.sigma = config_double(key, value);
  } else if (key == "propensity") {
    config.propensity = config_double(key, value);
  } else if (key == "n_samples") {
    config.n_samples = config_u64(key, value);
  } else if (key == "eta_row_percentiles") {
    config.search.eta_row_percentiles = config_double_list(key, value);
  } else if (key == "eta_col_percentiles") {
    config.search.eta_col_percentiles = config_double_list(key, value);
  } else if (key == "alpha_grid") {
    config.search.alpha_grid = config_double_list(key, value);
  } else if (key == "budget") {
    config.search.budget = config_u64(key, value);
  } else if (key == "tune_fraction") {
    config.search.holdout_fraction = config_double(key, value);
  } else if (key == "ml_cv_sample") {
    config.ml_cv_sample = config_u64(key, value);
  } else if (key == "ml_test_sample") {
    config.ml_test_sample = config_u64(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

BenchConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  BenchConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    try {
      apply_config_key(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

namespace {

void validate(const BenchConfig& c) {
  if (c.trials < 1) throw ConfigError("trials must be at least 1");
  if (c.estimators.empty()) throw ConfigError("at least one estimator is required");
  const bool dist_data = c.dataset.kind == DatasetSpec::Kind::SyntheticDist ||
                         c.dataset.kind == DatasetSpec::Kind::SamplesCsv;
  for (MethodId m : c.estimators) {
    if (is_distributional(m) != dist_data) {
      throw ConfigError(std::string("estimator '") + std::string(method_name(m)) +
                        (dist_data ? "' cannot run on a distributional dataset"
                                   : "' needs a distributional dataset"));
    }
  }
  if (c.metric == Metric::KsDistance && !dist_data) {
    throw ConfigError("ks_distance needs a distributional dataset");
  }
  const bool movielens = c.dataset.kind == DatasetSpec::Kind::MovieLens;
  if (!movielens && (!(c.eval_fraction > 0.0) || c.eval_fraction >= 1.0)) {
    throw ConfigError("eval_fraction must lie in (0, 1)");
  }
  if (!c.eval_indices.empty()) {
    if (movielens) {
      throw ConfigError("movielens pins its chronological split; eval_indices is not available");
    }
    for (std::size_t i = 0; i < c.eval_indices.size(); ++i) {
      for (std::size_t j = i + 1; j < c.eval_indices.size(); ++j) {
        if (c.eval_indices[i] == c.eval_indices[j]) {
          throw ConfigError("eval_indices lists " + std::to_string(c.eval_indices[i].row) + ":" +
                            std::to_string(c.eval_indices[i].col) + " twice");
        }
      }
    }
  }
  if (movielens && (c.ml_cv_sample < 1 || c.ml_test_sample < 1)) {
    throw ConfigError("movielens sample sizes must be at least 1");
  }
  const bool synthetic = c.dataset.kind == DatasetSpec::Kind::SyntheticScalar ||
                         c.dataset.kind == DatasetSpec::Kind::SyntheticDist;
  if (synthetic) {
    if (c.n_rows < 2 || c.n_cols < 2) throw ConfigError("synthetic dimensions must be >= 2");
    if (c.rank < 1) throw ConfigError("rank must be >= 1");
    if (c.sigma < 0.0) throw ConfigError("sigma must be >= 0");
    if (!(c.propensity > 0.0) || c.propensity > 1.0) {
      throw ConfigError("propensity must lie in (0, 1]");
    }
  }
  if (c.dataset.kind == DatasetSpec::Kind::SyntheticDist && c.n_samples < 2) {
    throw ConfigError("n_samples must be >= 2");
  }
  if (!(c.search.holdout_fraction > 0.0) || c.search.holdout_fraction >= 1.0) {
    throw ConfigError("tune_fraction must lie in (0, 1)");
  }
  if (c.search.budget < 1) throw ConfigError("budget must be at least 1");
}

// entry picks by index list over a pool of entries
std::vector<EntryIndex> pick_entries(const std::vector<EntryIndex>& pool, std::size_t want,
                                     std::uint64_t seed) {
  const std::size_t k = std::min(want, pool.size());
  std::vector<EntryIndex> out;
  out.reserve(k);
  for (std::size_t i : sample_indices(pool.size(), k, seed)) out.push_back(pool[i]);
  std::sort(out.begin(), out.end());
  return out;
}

// An explicit eval list must name observed cells: the split works by masking
// them, and outside the synthetic generators there is no truth anywhere else.
template <typename Matrix>
const std::vector<EntryIndex>& checked_eval_indices(const Matrix& m,
                                                    const std::vector<EntryIndex>& indices) {
  for (const EntryIndex& e : indices) {
    if (e.row >= m.rows() || e.col >= m.cols()) {
      throw ConfigError("eval_indices entry " + std::to_string(e.row) + ":" +
                        std::to_string(e.col) + " is outside the " + std::to_string(m.rows()) +
                        "x" + std::to_string(m.cols()) + " matrix");
    }
    if (!m.observed(e.row, e.col)) {
      throw ConfigError("eval_indices entry " + std::to_string(e.row) + ":" +
                        std::to_string(e.col) + " is not observed");
    }
  }
  return indices;
}

struct Accumulator {
  std::vector<EntryRecord>& entries;
  std::vector<TrialMethodSummary>& per_trial;

  void add(std::size_t trial, MethodId method, std::span<const EntryIndex> eval,
           const std::vector<std::optional<double>>& errors, const std::vector<bool>& fallbacks,
           const ScalarHyperParams& tuned, double tune_score) {
    TrialMethodSummary s;
    s.trial = trial;
    s.method = method;
    s.n_entries = eval.size();
    s.tuned = tuned;
    s.tune_score = tune_score;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      EntryRecord rec;
      rec.trial = trial;
      rec.method = method;
      rec.entry = eval[i];
      rec.failed = !errors[i].has_value();
      rec.fallback = fallbacks[i];
      if (errors[i]) {
        rec.error = *errors[i];
        sum += rec.error;
        ++n;
      }
      entries.push_back(rec);
    }
    s.n_failed = eval.size() - n;
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      s.mean_error = mean;
      if (n > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < eval.size(); ++i) {
          if (errors[i]) ss += (*errors[i] - mean) * (*errors[i] - mean);
        }
        s.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
      }
    }
    per_trial.push_back(s);
  }
};

std::string iso_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

BenchReport run(const BenchConfig& config) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();

  BenchReport report;
  report.config = config;
  Accumulator acc{report.entries, report.per_trial};

  const auto kind = config.dataset.kind;
  const bool dist_data =
      kind == DatasetSpec::Kind::SyntheticDist || kind == DatasetSpec::Kind::SamplesCsv;

  // file-backed datasets load once; loader errors propagate to the caller
  std::optional<LongCsv> long_csv;
  std::optional<SamplesCsv> samples_csv;
  std::optional<MovieLensData> movielens;
  std::optional<MaskedMatrix> ml_train_base;
  std::vector<EntryIndex> ml_train_pool, ml_test_pool;
  if (kind == DatasetSpec::Kind::LongCsv) {
    long_csv = load_long_csv(config.dataset.path);
  } else if (kind == DatasetSpec::Kind::SamplesCsv) {
    samples_csv = load_samples_csv(config.dataset.path);
  } else if (kind == DatasetSpec::Kind::MovieLens) {
    movielens = load_movielens(config.dataset.path);
    const MaskedMatrix& base = movielens->matrix;
    // chronological split: first 80% of ratings may be tuned on, the final
    // 20% is only ever scored
    std::vector<EntryIndex> obs = base.observed_entries();
    std::stable_sort(obs.begin(), obs.end(), [&](const EntryIndex& a, const EntryIndex& b) {
      return movielens->timestamps[a.row * base.cols() + a.col] <
             movielens->timestamps[b.row * base.cols() + b.col];
    });
    const std::size_t cut = obs.size() * 8 / 10;
    if (cut == 0 || cut == obs.size()) {
      throw ParseError("movielens split needs ratings on both sides of the 80% cut");
    }
    ml_train_pool.assign(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(cut));
    ml_test_pool.assign(obs.begin() + static_cast<std::ptrdiff_t>(cut), obs.end());
    ml_train_base = base.with_masked(ml_test_pool);
  }

  // per-trial seed streams, derived up front so trial order never matters
  std::uint64_t seed_state = config.seed;
  std::vector<std::uint64_t> trial_seeds(config.trials);
  for (auto& s : trial_seeds) s = splitmix64(seed_state);

  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    std::uint64_t local = trial_seeds[trial];
    const std::uint64_t gen_seed = splitmix64(local);
    const std::uint64_t eval_seed = splitmix64(local);
    const std::uint64_t tune_seed = splitmix64(local);
    const std::uint64_t cv_seed = splitmix64(local);

    if (!dist_data) {
      // ---- scalar datasets ----
      std::optional<ScalarGroundTruth> gt;
      std::optional<MaskedMatrix> full_storage;
      const MaskedMatrix* full = nullptr;
      std::vector<EntryIndex> eval, cv;
      if (kind == DatasetSpec::Kind::SyntheticScalar) {
        SyntheticSpec spec;
        spec.n_rows = config.n_rows;
        spec.n_cols = config.n_cols;
        spec.rank = config.rank;
        spec.noise_sd = config.sigma;
        spec.propensity = config.propensity;
        spec.seed = gen_seed;
        gt = gen_synthetic_scalar(spec);
        full = &gt->matrix;
        eval = config.eval_indices.empty()
                   ? holdout_split(*full, config.eval_fraction, eval_seed)
                   : checked_eval_indices(*full, config.eval_indices);
      } else if (kind == DatasetSpec::Kind::LongCsv) {
        full = &long_csv->matrix;
        eval = config.eval_indices.empty()
                   ? holdout_split(*full, config.eval_fraction, eval_seed)
                   : checked_eval_indices(*full, config.eval_indices);
      } else {  // movielens
        full = &movielens->matrix;
        eval = pick_entries(ml_test_pool, config.ml_test_sample, eval_seed);
        cv = pick_entries(ml_train_pool, config.ml_cv_sample, cv_seed);
      }

      std::vector<double> truth(eval.size());
      for (std::size_t i = 0; i < eval.size(); ++i) {
        truth[i] = gt ? gt->theta[eval[i].row * full->cols() + eval[i].col]
                      : full->at(eval[i].row, eval[i].col);
      }
      const MaskedMatrix* train = ml_train_base ? &*ml_train_base : nullptr;
      std::optional<MaskedMatrix> train_storage;
      if (!train) {
        train_storage = full->with_masked(eval);
        train = &*train_storage;
      }

      for (MethodId method : config.estimators) {
        SearchSpace space = config.search;
        space.seed = tune_seed;
        const TuneResult tr = cv.empty() ? tune(*train, method, space)
                                         : tune_with_holdout(*train, method, space, cv);
        const auto est = batch_impute_scalar(*train, method, tr.best_params, eval);
        std::vector<std::optional<double>> errors(eval.size());
        std::vector<bool> fallbacks(eval.size(), false);
        for (std::size_t i = 0; i < eval.size(); ++i) {
          if (est[i]) {
            errors[i] = abs_error(est[i]->value, truth[i]);
            fallbacks[i] = est[i]->fallback_used;
          }
        }
        acc.add(trial, method, eval, errors, fallbacks, tr.best_params, tr.best_score);
      }
    } else {
      // ---- distributional datasets ----
      std::optional<DistGroundTruth> gt;
      const DistMatrix* full = nullptr;
      if (kind == DatasetSpec::Kind::SyntheticDist) {
        SyntheticSpec spec;
        spec.n_rows = config.n_rows;
        spec.n_cols = config.n_cols;
        spec.rank = config.rank;
        spec.noise_sd = config.sigma;
        spec.propensity = config.propensity;
        spec.sample_count = config.n_samples;
        spec.seed = gen_seed;
        gt = gen_synthetic_dist(spec);
        full = &gt->matrix;
      } else {
        full = &samples_csv->matrix;
      }
      std::vector<EntryIndex> eval;
      if (config.eval_indices.empty()) {
        const std::vector<EntryIndex> obs = full->observed_entries();
        std::size_t k = static_cast<std::size_t>(
            std::llround(config.eval_fraction * static_cast<double>(obs.size())));
        k = std::clamp<std::size_t>(k, 1, obs.size());
        eval = pick_entries(obs, k, eval_seed);
      } else {
        eval = checked_eval_indices(*full, config.eval_indices);
      }
      const DistMatrix train = full->with_masked(eval);

      std::vector<EmpiricalMeasure> truth_measure;
      std::vector<double> truth_scalar(eval.size());
      truth_measure.reserve(eval.size());
      for (std::size_t i = 0; i < eval.size(); ++i) {
        truth_measure.push_back(
            EmpiricalMeasure::from_samples(full->samples_at(eval[i].row, eval[i].col)));
        truth_scalar[i] = gt ? gt->theta[eval[i].row * full->cols() + eval[i].col]
                             : truth_measure.back().mean();
      }

      for (MethodId method : config.estimators) {
        const bool kernel = method == MethodId::KernelNN || method == MethodId::KernelNNCol;
        const EntryMetric em =
            kernel ? EntryMetric::mmd2(median_heuristic_bandwidth(train)) : EntryMetric::w2_squared();
        SearchSpace space = config.search;
        space.seed = tune_seed;
        const DistLoss loss =
            config.metric == Metric::KsDistance ? DistLoss::KsDistance : DistLoss::AbsMeanError;
        const DistTuneResult tr = tune_dist(train, method, em, space, loss);
        const auto est = batch_impute_dist(train, method, tr.best_eta, em, eval);
        std::vector<std::optional<double>> errors(eval.size());
        std::vector<bool> fallbacks(eval.size(), false);
        for (std::size_t i = 0; i < eval.size(); ++i) {
          if (!est[i]) continue;
          fallbacks[i] = est[i]->fallback_used;
          errors[i] = config.metric == Metric::KsDistance
                          ? ks_distance(est[i]->value, truth_measure[i])
                          : abs_error(est[i]->value.mean(), truth_scalar[i]);
        }
        ScalarHyperParams tuned;
        const bool col_axis = method == MethodId::KernelNNCol || method == MethodId::W2NNCol;
        (col_axis ? tuned.eta_col : tuned.eta_row) = tr.best_eta;
        acc.add(trial, method, eval, errors, fallbacks, tuned, tr.best_score);
      }
    }
  }

  // overall: mean of trial means per estimator, SE across trials
  for (MethodId method : config.estimators) {
    MethodSummary ms;
    ms.method = method;
    std::vector<double> means;
    for (const TrialMethodSummary& s : report.per_trial) {
      if (s.method == method && s.mean_error) means.push_back(*s.mean_error);
    }
    ms.n_trials = means.size();
    if (!means.empty()) {
      const double mean =
          std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
      ms.mean_of_trial_means = mean;
      if (means.size() > 1) {
        double ss = 0.0;
        for (double v : means) ss += (v - mean) * (v - mean);
        ms.se_over_trials = std::sqrt(ss / static_cast<double>(means.size() - 1) /
                                      static_cast<double>(means.size()));
      }
    }
    report.overall.push_back(ms);
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.timestamp = iso_utc_now();
  return report;
}

namespace {

ordered_json threshold_json(const Threshold& t) {
  return {{"kind", t.kind == Threshold::Kind::Percentile ? "percentile" : "absolute"},
          {"value", t.value}};
}

ordered_json params_json(const ScalarHyperParams& p) {
  return {{"eta_row", threshold_json(p.eta_row)},
          {"eta_col", threshold_json(p.eta_col)},
          {"alpha", p.alpha},
          {"awnn_reg", p.awnn_reg}};
}

}  // namespace

std::string report_json(const BenchReport& report) {
  const BenchConfig& c = report.config;
  ordered_json j;
  j["library_version"] = kVersion;
  ordered_json cfg;
  cfg["dataset"] = c.dataset.to_string();
  std::vector<std::string> est_names;
  for (MethodId m : c.estimators) est_names.emplace_back(method_name(m));
  cfg["estimators"] = est_names;
  cfg["metric"] = std::string(metric_name(c.metric));
  cfg["trials"] = c.trials;
  cfg["seed"] = c.seed;
  cfg["eval_fraction"] = c.eval_fraction;
  cfg["eval_indices"] = nlohmann::ordered_json::array();
  for (const EntryIndex& e : c.eval_indices) {
    cfg["eval_indices"].push_back(std::to_string(e.row) + ":" + std::to_string(e.col));
  }
  cfg["out"] = c.out;
  cfg["synthetic"] = {{"n_rows", c.n_rows},     {"n_cols", c.n_cols},
                      {"rank", c.rank},         {"sigma", c.sigma},
                      {"propensity", c.propensity}, {"n_samples", c.n_samples}};
  cfg["search"] = {{"eta_row_percentiles", c.search.eta_row_percentiles},
                   {"eta_col_percentiles", c.search.eta_col_percentiles},
                   {"alpha_grid", c.search.alpha_grid},
                   {"budget", c.search.budget},
                   {"tune_fraction", c.search.holdout_fraction}};
  cfg["movielens"] = {{"cv_sample", c.ml_cv_sample}, {"test_sample", c.ml_test_sample}};
  j["config"] = cfg;

  ordered_json per_trial = ordered_json::array();
  for (const TrialMethodSummary& s : report.per_trial) {
    ordered_json row;
    row["trial"] = s.trial;
    row["estimator"] = std::string(method_name(s.method));
    row["n_entries"] = s.n_entries;
    row["n_failed"] = s.n_failed;
    if (s.mean_error) {
      row["mean_error"] = *s.mean_error;
    } else {
      row["mean_error"] = nullptr;
    }
    row["std_error"] = s.std_error;
    row["tune_score"] = s.tune_score;
    row["params"] = params_json(s.tuned);
    per_trial.push_back(std::move(row));
  }
  j["per_trial"] = std::move(per_trial);

  ordered_json overall = ordered_json::array();
  for (const MethodSummary& s : report.overall) {
    ordered_json row;
    row["estimator"] = std::string(method_name(s.method));
    if (s.mean_of_trial_means) {
      row["mean_of_trial_means"] = *s.mean_of_trial_means;
    } else {
      row["mean_of_trial_means"] = nullptr;
    }
    row["se_over_trials"] = s.se_over_trials;
    row["n_trials"] = s.n_trials;
    overall.push_back(std::move(row));
  }
  j["overall"] = std::move(overall);

  j["timing"] = {{"timestamp", report.timestamp}, {"runtime_seconds", report.runtime_seconds}};
  return j.dump(2) + "\n";
}

std::string report_csv(const BenchReport& report) {
  std::string out = "trial,estimator,row,col,error,fallback,failed\n";
  char buf[64];
  for (const EntryRecord& r : report.entries) {
    out += std::to_string(r.trial);
    out += ',';
    out += method_name(r.method);
    out += ',';
    out += std::to_string(r.entry.row);
    out += ',';
    out += std::to_string(r.entry.col);
    out += ',';
    if (!r.failed) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), r.error);
      out.append(buf, res.ptr);
    }
    out += ',';
    out += r.fallback ? '1' : '0';
    out += ',';
    out += r.failed ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string write_report(const BenchReport& report) {
  const std::string& json_path = report.config.out;
  std::string csv_path = json_path;
  const auto slash = csv_path.find_last_of('/');
  const auto dot = csv_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    csv_path.resize(dot);
  }
  csv_path += ".csv";

  std::ofstream jf(json_path, std::ios::trunc | std::ios::binary);
  if (!jf) throw ParseError("cannot open " + json_path + " for writing");
  jf << report_json(report);
  if (!jf) throw ParseError("write failed: " + json_path);
  jf.close();

  std::ofstream cf(csv_path, std::ios::trunc | std::ios::binary);
  if (!cf) throw ParseError("cannot open " + csv_path + " for writing");
  cf << report_csv(report);
  if (!cf) throw ParseError("write failed: " + csv_path);
  return csv_path;
}

}  // namespace nnc
