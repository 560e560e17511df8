#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nnc/data.hpp"

using namespace nnc;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Masked cells hold NaN, so vector operator== can never say two generated
// matrices agree; compare cell by cell treating NaN as equal to itself.
bool same_cells(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

}  // namespace

TEST_CASE("scalar generator is deterministic and honors its parameters") {
  SyntheticSpec spec;
  spec.n_rows = 30;
  spec.n_cols = 20;
  spec.rank = 4;
  spec.noise_sd = 0.5;
  spec.propensity = 0.6;
  spec.seed = 123;
  const auto a = gen_synthetic_scalar(spec);
  const auto b = gen_synthetic_scalar(spec);
  CHECK(a.theta == b.theta);
  CHECK(same_cells(a.matrix.values(), b.matrix.values()));
  CHECK(a.matrix.mask() == b.matrix.mask());
  REQUIRE(a.theta.size() == 600);
  // rank-4 uniform factors keep theta inside [-1, 1]
  for (double v : a.theta) CHECK(std::abs(v) <= 1.0);
  // propensity 0.6 on 600 cells: a wide but safe band
  CHECK(a.matrix.observed_count() > 280);
  CHECK(a.matrix.observed_count() < 440);
  spec.seed = 124;
  const auto c = gen_synthetic_scalar(spec);
  CHECK(a.matrix.values() != c.matrix.values());
}

TEST_CASE("theta and mask are invariant across noise levels") {
  SyntheticSpec lo;
  lo.n_rows = 15;
  lo.n_cols = 12;
  lo.noise_sd = 0.001;
  lo.propensity = 0.5;
  lo.seed = 77;
  SyntheticSpec hi = lo;
  hi.noise_sd = 1.0;
  const auto a = gen_synthetic_scalar(lo);
  const auto b = gen_synthetic_scalar(hi);
  CHECK(a.theta == b.theta);
  CHECK(a.matrix.mask() == b.matrix.mask());
  // noiseless observations equal theta exactly
  SyntheticSpec clean = lo;
  clean.noise_sd = 0.0;
  const auto c = gen_synthetic_scalar(clean);
  for (std::size_t i = 0; i < c.matrix.rows(); ++i) {
    for (std::size_t t = 0; t < c.matrix.cols(); ++t) {
      if (c.matrix.observed(i, t)) {
        CHECK(c.matrix.at(i, t) == c.theta[i * c.matrix.cols() + t]);
      }
    }
  }
}

TEST_CASE("theta_const overrides the signal without shifting the streams") {
  SyntheticSpec spec;
  spec.n_rows = 10;
  spec.n_cols = 10;
  spec.noise_sd = 0.3;
  spec.propensity = 0.7;
  spec.seed = 31;
  const auto base = gen_synthetic_scalar(spec);
  SyntheticSpec flat = spec;
  flat.theta_const = 2.0;
  const auto c = gen_synthetic_scalar(flat);
  CHECK(c.matrix.mask() == base.matrix.mask());
  for (double v : c.theta) CHECK(v == 2.0);
  // noise draws are identical, so observed = 2 + (base observed - base theta)
  for (std::size_t k = 0; k < c.theta.size(); ++k) {
    if (base.matrix.mask()[k]) {
      CHECK(c.matrix.values()[k] ==
            doctest::Approx(2.0 + base.matrix.values()[k] - base.theta[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("generator validates its inputs") {
  SyntheticSpec spec;
  spec.n_rows = 0;
  spec.n_cols = 5;
  CHECK_THROWS(gen_synthetic_scalar(spec));
  spec.n_rows = 5;
  spec.propensity = 0.0;
  CHECK_THROWS(gen_synthetic_scalar(spec));
  spec.propensity = 0.5;
  spec.noise_sd = -1.0;
  CHECK_THROWS(gen_synthetic_scalar(spec));
  spec.noise_sd = 0.1;
  spec.rank = 0;
  CHECK_THROWS(gen_synthetic_scalar(spec));
  spec.rank = 2;
  spec.sample_count = 1;
  CHECK_THROWS(gen_synthetic_dist(spec));
}

TEST_CASE("distributional generator centers samples on theta") {
  SyntheticSpec spec;
  spec.n_rows = 12;
  spec.n_cols = 10;
  spec.noise_sd = 0.25;
  spec.propensity = 0.8;
  spec.sample_count = 400;
  spec.seed = 9;
  const auto gt = gen_synthetic_dist(spec);
  const auto gt2 = gen_synthetic_dist(spec);
  CHECK(gt.theta == gt2.theta);
  CHECK(gt.matrix.mask() == gt2.matrix.mask());
  const auto [lo, hi] = gt.matrix.sample_count_range();
  CHECK(lo == 400);
  CHECK(hi == 400);
  // per-cell sample means concentrate around theta at n = 400
  for (std::size_t i = 0; i < gt.matrix.rows(); ++i) {
    for (std::size_t t = 0; t < gt.matrix.cols(); ++t) {
      if (!gt.matrix.observed(i, t)) continue;
      const auto s = gt.matrix.samples_at(i, t);
      double mean = 0.0;
      for (double x : s) mean += x;
      mean /= static_cast<double>(s.size());
      CHECK(std::abs(mean - gt.theta[i * gt.matrix.cols() + t]) < 0.1);
    }
  }
}

TEST_CASE("scalar and distributional generators share theta and mask") {
  SyntheticSpec spec;
  spec.n_rows = 8;
  spec.n_cols = 9;
  spec.noise_sd = 0.5;
  spec.propensity = 0.7;
  spec.sample_count = 3;
  spec.seed = 55;
  const auto s = gen_synthetic_scalar(spec);
  const auto d = gen_synthetic_dist(spec);
  CHECK(s.theta == d.theta);
  CHECK(s.matrix.mask() == d.matrix.mask());
}

TEST_CASE("long csv round-trips a dense matrix exactly") {
  SyntheticSpec spec;
  spec.n_rows = 9;
  spec.n_cols = 7;
  spec.noise_sd = 0.8;
  spec.seed = 14;  // propensity 1: dense, so interning order is the identity
  const MaskedMatrix m = gen_synthetic_scalar(spec).matrix;
  const std::string path = temp_path("nnc_roundtrip.csv");
  write_long_csv(m, path);
  const LongCsv loaded = load_long_csv(path);
  CHECK(loaded.matrix.rows() == m.rows());
  CHECK(loaded.matrix.cols() == m.cols());
  CHECK(loaded.matrix.values() == m.values());
  CHECK(loaded.matrix.mask() == m.mask());
  CHECK(loaded.row_ids.size() == m.rows());
  std::filesystem::remove(path);
}

TEST_CASE("long csv round-trips a sparse matrix up to id relabeling") {
  SyntheticSpec spec;
  spec.n_rows = 9;
  spec.n_cols = 7;
  spec.noise_sd = 0.8;
  spec.propensity = 0.5;
  spec.seed = 14;
  const MaskedMatrix m = gen_synthetic_scalar(spec).matrix;
  const std::string path = temp_path("nnc_roundtrip_sparse.csv");
  write_long_csv(m, path);
  const LongCsv loaded = load_long_csv(path);
  CHECK(loaded.matrix.observed_count() == m.observed_count());
  // ids are the original decimal indices; map them back and compare cells
  for (std::size_t i = 0; i < loaded.matrix.rows(); ++i) {
    const std::size_t orig_i = std::stoul(loaded.row_ids[i]);
    for (std::size_t t = 0; t < loaded.matrix.cols(); ++t) {
      const std::size_t orig_t = std::stoul(loaded.col_ids[t]);
      CHECK(loaded.matrix.observed(i, t) == m.observed(orig_i, orig_t));
      if (loaded.matrix.observed(i, t)) CHECK(loaded.matrix.at(i, t) == m.at(orig_i, orig_t));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("long csv loader reports malformed input precisely") {
  const std::string path = temp_path("nnc_bad.csv");
  SUBCASE("wrong header") {
    write_file(path, "a,b,c\nu1,i1,3.5\n");
    CHECK_THROWS_AS(load_long_csv(path), ParseError);
  }
  SUBCASE("wrong field count") {
    write_file(path, "row_id,col_id,value\nu1,i1\n");
    CHECK_THROWS_AS(load_long_csv(path), ParseError);
  }
  SUBCASE("bad number") {
    write_file(path, "row_id,col_id,value\nu1,i1,xyz\n");
    CHECK_THROWS_AS(load_long_csv(path), ParseError);
  }
  SUBCASE("duplicate cell names the two lines") {
    write_file(path, "row_id,col_id,value\nu1,i1,1.0\nu2,i1,2.0\nu1,i1,3.0\n");
    try {
      load_long_csv(path);
      FAIL("expected DuplicateEntry");
    } catch (const DuplicateEntry& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("line 4") != std::string::npos);
    }
  }
  SUBCASE("empty body") {
    write_file(path, "row_id,col_id,value\n");
    CHECK_THROWS_AS(load_long_csv(path), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_long_csv(temp_path("nnc_does_not_exist.csv")), ParseError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("long csv accepts crlf endings and skips blank lines") {
  const std::string path = temp_path("nnc_crlf.csv");
  write_file(path, "row_id,col_id,value\r\nu1,i1,1.5\r\n\r\nu2,i2,2.5\r\n");
  const LongCsv loaded = load_long_csv(path);
  CHECK(loaded.matrix.rows() == 2);
  CHECK(loaded.matrix.cols() == 2);
  CHECK(loaded.matrix.at(0, 0) == 1.5);
  CHECK(loaded.matrix.observed_count() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("samples csv loads per-cell sample lists") {
  const std::string path = temp_path("nnc_samples.csv");
  write_file(path,
             "row_id,col_id,sample_idx,value\n"
             "u1,i1,0,1.0\n"
             "u1,i1,1,2.0\n"
             "u2,i1,1,4.0\n"
             "u2,i1,0,3.0\n");
  const SamplesCsv loaded = load_samples_csv(path);
  CHECK(loaded.matrix.rows() == 2);
  CHECK(loaded.matrix.cols() == 1);
  const auto s = loaded.matrix.samples_at(1, 0);
  REQUIRE(s.size() == 2);
  // samples come back ordered by sample_idx
  CHECK(s[0] == 3.0);
  CHECK(s[1] == 4.0);
  SUBCASE("duplicate sample index") {
    write_file(path,
               "row_id,col_id,sample_idx,value\nu1,i1,0,1.0\nu1,i1,0,2.0\nu1,i1,1,1.0\n");
    CHECK_THROWS_AS(load_samples_csv(path), DuplicateEntry);
  }
  SUBCASE("single-sample cell is rejected downstream") {
    write_file(path, "row_id,col_id,sample_idx,value\nu1,i1,0,1.0\n");
    CHECK_THROWS_AS(load_samples_csv(path), TooFewSamples);
  }
  std::filesystem::remove(path);
}

TEST_CASE("movielens loader parses the :: format into the fixed grid") {
  const std::string path = temp_path("nnc_ml.dat");
  write_file(path,
             "1::1::5::978300760\n"
             "1::1193::3::978300761\n"
             "6040::3952::1::956703932\n");
  const MovieLensData ml = load_movielens(path);
  CHECK(ml.matrix.rows() == 6040);
  CHECK(ml.matrix.cols() == 3952);
  CHECK(ml.matrix.observed_count() == 3);
  CHECK(ml.matrix.at(0, 0) == 5.0);
  CHECK(ml.matrix.at(0, 1192) == 3.0);
  CHECK(ml.matrix.at(6039, 3951) == 1.0);
  CHECK(ml.timestamps[0] == 978300760);
  CHECK(ml.timestamps[6039 * 3952 + 3951] == 956703932);
  CHECK(ml.timestamps[1] == -1);  // unobserved sentinel
  SUBCASE("rating out of range") {
    write_file(path, "1::1::6::978300760\n1::2::3::978300760\n");
    CHECK_THROWS_AS(load_movielens(path), RatingOutOfRange);
  }
  SUBCASE("user id out of range") {
    write_file(path, "6041::1::5::978300760\n");
    CHECK_THROWS_AS(load_movielens(path), ParseError);
  }
  SUBCASE("duplicate rating") {
    write_file(path, "1::1::5::978300760\n1::1::4::978300761\n");
    CHECK_THROWS_AS(load_movielens(path), DuplicateEntry);
  }
  SUBCASE("malformed line") {
    write_file(path, "1::1::5\n");
    CHECK_THROWS_AS(load_movielens(path), ParseError);
  }
  std::filesystem::remove(path);
}
