#include "nnc/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace nnc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// uniform in [0, 1) from the top 53 bits; pinned arithmetic, no distribution
// object, so the stream is identical on every platform
double draw01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// standard normal via Box-Muller; u1 is shifted into (0, 1] so the log stays
// finite. One engine draw pair per variate keeps the stream position fixed.
double draw_normal(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = draw01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

void validate_spec(const SyntheticSpec& spec, bool dist) {
  if (spec.n_rows < 1 || spec.n_cols < 1) throw std::invalid_argument("dimensions must be >= 1");
  if (spec.rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (spec.noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
  if (!(spec.propensity > 0.0) || spec.propensity > 1.0) {
    throw std::invalid_argument("propensity must lie in (0, 1]");
  }
  if (dist && spec.sample_count < 2) {
    throw std::invalid_argument("sample_count must be >= 2");
  }
}

// factors, theta, and the mask in the pinned stream order; after this call
// the rng is positioned at the start of the per-entry sample stream
struct SignalAndMask {
  std::vector<double> theta;
  std::vector<double> noisy;  // theta + sigma * noise
  std::vector<std::uint8_t> mask;
};

SignalAndMask draw_signal(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.n_rows, t = spec.n_cols, r = spec.rank;
  std::vector<double> u(n * r), v(t * r);
  for (auto& x : u) x = draw01(rng) - 0.5;
  for (auto& x : v) x = draw01(rng) - 0.5;

  SignalAndMask out;
  out.theta.resize(n * t);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < r; ++k) dot += u[i * r + k] * v[j * r + k];
      out.theta[i * t + j] = spec.theta_const ? *spec.theta_const : dot;
    }
  }
  out.noisy.resize(n * t);
  for (std::size_t c = 0; c < n * t; ++c) {
    out.noisy[c] = out.theta[c] + spec.noise_sd * draw_normal(rng);
  }
  out.mask.resize(n * t);
  for (std::size_t c = 0; c < n * t; ++c) {
    out.mask[c] = draw01(rng) < spec.propensity ? 1 : 0;
  }
  return out;
}

}  // namespace

ScalarGroundTruth gen_synthetic_scalar(const SyntheticSpec& spec) {
  validate_spec(spec, false);
  std::mt19937_64 rng(spec.seed);
  SignalAndMask s = draw_signal(spec, rng);
  return {std::move(s.theta),
          MaskedMatrix::build(std::move(s.noisy), std::move(s.mask), spec.n_rows, spec.n_cols)};
}

DistGroundTruth gen_synthetic_dist(const SyntheticSpec& spec) {
  validate_spec(spec, true);
  std::mt19937_64 rng(spec.seed);
  SignalAndMask s = draw_signal(spec, rng);
  const std::size_t cells = spec.n_rows * spec.n_cols;
  std::vector<std::vector<double>> samples(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    if (!s.mask[c]) continue;
    samples[c].resize(spec.sample_count);
    for (std::size_t k = 0; k < spec.sample_count; ++k) {
      samples[c][k] = s.theta[c] + spec.noise_sd * draw_normal(rng);
    }
  }
  return {std::move(s.theta),
          DistMatrix::build(std::move(samples), std::move(s.mask), spec.n_rows, spec.n_cols)};
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

// strips one trailing \r so CRLF files load the same as LF files
std::string chomp(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    parse_fail(path, line, "bad numeric value '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& path, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    parse_fail(path, line, "bad integer '" + s + "'");
  }
  return v;
}

// first-appearance interning of string identifiers
std::size_t intern(std::unordered_map<std::string, std::size_t>& map,
                   std::vector<std::string>& order, const std::string& id) {
  const auto [it, inserted] = map.emplace(id, order.size());
  if (inserted) order.push_back(id);
  return it->second;
}

}  // namespace

LongCsv load_long_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
  ++lineno;
  if (chomp(line) != "row_id,col_id,value") {
    parse_fail(path, lineno, "header must be 'row_id,col_id,value'");
  }

  std::unordered_map<std::string, std::size_t> row_map, col_map;
  std::vector<std::string> row_ids, col_ids;
  struct Rec {
    std::size_t row, col, lineno;
    double value;
  };
  std::vector<Rec> recs;
  std::unordered_map<std::uint64_t, std::size_t> seen;  // cell key -> line number

  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) parse_fail(path, lineno, "expected 3 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[1].empty()) parse_fail(path, lineno, "empty identifier");
    const std::size_t r = intern(row_map, row_ids, f[0]);
    const std::size_t c = intern(col_map, col_ids, f[1]);
    const double v = parse_double(f[2], path, lineno);
    const std::uint64_t key = (static_cast<std::uint64_t>(r) << 32) | static_cast<std::uint64_t>(c);
    const auto [it, inserted] = seen.emplace(key, lineno);
    if (!inserted) {
      throw DuplicateEntry(path + ": (" + f[0] + ", " + f[1] + ") appears on line " +
                           std::to_string(it->second) + " and line " + std::to_string(lineno));
    }
    recs.push_back({r, c, lineno, v});
  }
  if (recs.empty()) throw ParseError(path + ": no records");

  const std::size_t n = row_ids.size(), t = col_ids.size();
  std::vector<double> values(n * t, 0.0);
  std::vector<std::uint8_t> mask(n * t, 0);
  for (const Rec& rec : recs) {
    values[rec.row * t + rec.col] = rec.value;
    mask[rec.row * t + rec.col] = 1;
  }
  return {MaskedMatrix::build(std::move(values), std::move(mask), n, t), std::move(row_ids),
          std::move(col_ids)};
}

void write_long_csv(const MaskedMatrix& m, const std::string& path,
                    const std::vector<std::string>& row_ids,
                    const std::vector<std::string>& col_ids) {
  if (!row_ids.empty() && row_ids.size() != m.rows()) {
    throw DimensionMismatch("row_ids length does not match the matrix");
  }
  if (!col_ids.empty() && col_ids.size() != m.cols()) {
    throw DimensionMismatch("col_ids length does not match the matrix");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "row_id,col_id,value\n";
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t t = 0; t < m.cols(); ++t) {
      if (!m.observed(i, t)) continue;
      const auto res = std::to_chars(buf, buf + sizeof(buf), m.at(i, t));
      const std::string_view value(buf, static_cast<std::size_t>(res.ptr - buf));
      if (row_ids.empty()) {
        out << i;
      } else {
        out << row_ids[i];
      }
      out << ',';
      if (col_ids.empty()) {
        out << t;
      } else {
        out << col_ids[t];
      }
      out << ',' << value << '\n';
    }
  }
  if (!out) throw ParseError("write failed: " + path);
}

SamplesCsv load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) parse_fail(path, 1, "missing header");
  ++lineno;
  if (chomp(line) != "row_id,col_id,sample_idx,value") {
    parse_fail(path, lineno, "header must be 'row_id,col_id,sample_idx,value'");
  }

  std::unordered_map<std::string, std::size_t> row_map, col_map;
  std::vector<std::string> row_ids, col_ids;
  // per cell: (sample_idx, value, line)
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint64_t, double>>> cells;
  std::unordered_map<std::uint64_t, std::size_t> sample_seen;  // (cell, idx) -> line

  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) parse_fail(path, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[1].empty()) parse_fail(path, lineno, "empty identifier");
    const std::size_t r = intern(row_map, row_ids, f[0]);
    const std::size_t c = intern(col_map, col_ids, f[1]);
    const std::uint64_t idx = parse_u64(f[2], path, lineno);
    const double v = parse_double(f[3], path, lineno);
    if (r >= (1u << 24) || c >= (1u << 24) || idx >= (1u << 16)) {
      parse_fail(path, lineno, "identifier spaces larger than supported");
    }
    const std::uint64_t cell = (static_cast<std::uint64_t>(r) << 24) | static_cast<std::uint64_t>(c);
    const std::uint64_t skey = (cell << 16) | idx;
    const auto [it, inserted] = sample_seen.emplace(skey, lineno);
    if (!inserted) {
      throw DuplicateEntry(path + ": (" + f[0] + ", " + f[1] + ", " + f[2] +
                           ") appears on line " + std::to_string(it->second) + " and line " +
                           std::to_string(lineno));
    }
    cells[cell].emplace_back(idx, v);
  }
  if (cells.empty()) throw ParseError(path + ": no records");

  const std::size_t n = row_ids.size(), t = col_ids.size();
  std::vector<std::vector<double>> samples(n * t);
  std::vector<std::uint8_t> mask(n * t, 0);
  for (auto& [cell, recs] : cells) {
    const std::size_t r = cell >> 24;
    const std::size_t c = cell & ((1u << 24) - 1);
    std::sort(recs.begin(), recs.end());
    auto& dst = samples[r * t + c];
    dst.reserve(recs.size());
    for (const auto& [idx, v] : recs) dst.push_back(v);
    mask[r * t + c] = 1;
  }
  return {DistMatrix::build(std::move(samples), std::move(mask), n, t), std::move(row_ids),
          std::move(col_ids)};
}

MovieLensData load_movielens(const std::string& path) {
  constexpr std::size_t kUsers = 6040, kMovies = 3952;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<double> values(kUsers * kMovies, 0.0);
  std::vector<std::uint8_t> mask(kUsers * kMovies, 0);
  std::vector<std::int64_t> timestamps(kUsers * kMovies, -1);
  std::vector<std::uint32_t> first_line(kUsers * kMovies, 0);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    // UserID::MovieID::Rating::Timestamp
    std::array<std::string, 4> f;
    std::size_t start = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t pos = k == 3 ? std::string::npos : line.find("::", start);
      if (k < 3 && pos == std::string::npos) parse_fail(path, lineno, "expected 4 '::' fields");
      f[k] = line.substr(start, pos == std::string::npos ? pos : pos - start);
      start = pos + 2;
    }
    const std::uint64_t user = parse_u64(f[0], path, lineno);
    const std::uint64_t movie = parse_u64(f[1], path, lineno);
    if (user < 1 || user > kUsers) parse_fail(path, lineno, "user id out of range");
    if (movie < 1 || movie > kMovies) parse_fail(path, lineno, "movie id out of range");
    const std::uint64_t rating = parse_u64(f[2], path, lineno);
    if (rating < 1 || rating > 5) {
      throw RatingOutOfRange(path + ":" + std::to_string(lineno) + ": rating " + f[2]);
    }
    std::int64_t ts = 0;
    {
      const auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), ts);
      if (ec != std::errc{} || ptr != f[3].data() + f[3].size() || f[3].empty()) {
        parse_fail(path, lineno, "bad timestamp '" + f[3] + "'");
      }
    }
    const std::size_t cell = (user - 1) * kMovies + (movie - 1);
    if (mask[cell]) {
      throw DuplicateEntry(path + ": (user " + f[0] + ", movie " + f[1] + ") appears on line " +
                           std::to_string(first_line[cell]) + " and line " +
                           std::to_string(lineno));
    }
    mask[cell] = 1;
    values[cell] = static_cast<double>(rating);
    timestamps[cell] = ts;
    first_line[cell] = static_cast<std::uint32_t>(lineno);
  }
  if (lineno == 0) throw ParseError(path + ": no records");

  return {MaskedMatrix::build(std::move(values), std::move(mask), kUsers, kMovies),
          std::move(timestamps)};
}

}  // namespace nnc
