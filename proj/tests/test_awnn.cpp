#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "nnc/data.hpp"
#include "nnc/distance.hpp"
#include "nnc/estimators.hpp"

using namespace nnc;

namespace {

DissimilarityProfile make_prof(std::size_t target, std::vector<double> values,
                               std::vector<std::uint8_t> defined) {
  DissimilarityProfile p;
  p.axis = Axis::Row;
  p.target = target;
  p.values = std::move(values);
  p.defined = std::move(defined);
  return p;
}

// Euclidean projection onto the probability simplex
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  std::size_t rho_idx = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho_idx = i;
      theta = t;
    }
  }
  (void)rho_idx;
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

// reference solver: projected gradient on lambda ||v||^2 + <v, rho>, run to a
// tight stationarity tolerance
std::vector<double> qp_reference(const std::vector<double>& rho, double lambda) {
  const std::size_t n = rho.size();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  const double step = 0.45 / lambda;  // < 1/L with L = 2 lambda
  for (int it = 0; it < 200000; ++it) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = 2.0 * lambda * v[k] + rho[k];
    std::vector<double> next(n);
    for (std::size_t k = 0; k < n; ++k) next[k] = v[k] - step * g[k];
    next = project_simplex(std::move(next));
    double delta = 0.0;
    for (std::size_t k = 0; k < n; ++k) delta = std::max(delta, std::abs(next[k] - v[k]));
    v = std::move(next);
    if (delta < 1e-10 * step) break;
  }
  return v;
}

double qp_objective(const std::vector<double>& v, const std::vector<double>& rho, double lambda) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += lambda * v[k] * v[k] + v[k] * rho[k];
  return s;
}

}  // namespace

TEST_CASE("adaptive weights on worked examples") {
  const std::vector<std::uint8_t> mask(4, 1);
  SUBCASE("small lambda concentrates on the closest donor") {
    const auto p = make_prof(0, {1.0, 2.0, 4.0}, {1, 1, 1});
    const auto w = awnn_weights(p, mask, 1.0, 0.5);  // lambda = 0.5
    REQUIRE(w.weights.size() == 3);
    CHECK(w.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.weights[1] == 0.0);
    CHECK(w.weights[2] == 0.0);
  }
  SUBCASE("moderate lambda spreads over a prefix") {
    const auto p = make_prof(0, {1.0, 2.0, 4.0}, {1, 1, 1});
    const auto w = awnn_weights(p, mask, 1.0, 2.0);  // lambda = 2
    CHECK(w.weights[0] == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(w.weights[1] == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(w.weights[2] == 0.0);
  }
  SUBCASE("equal distances get equal weights") {
    const auto p = make_prof(0, {1.0, 1.0, 5.0}, {1, 1, 1});
    const auto w = awnn_weights(p, mask, 1.0, 0.5);
    CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.weights[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.weights[2] == 0.0);
  }
  SUBCASE("huge lambda approaches the uniform average") {
    const auto p = make_prof(0, {1.0, 2.0, 4.0}, {1, 1, 1});
    const auto w = awnn_weights(p, mask, 1.0, 1e6);
    for (double x : w.weights) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
  }
}

TEST_CASE("adaptive weights respect candidate masks and profile gaps") {
  // slot 1 (row 2) is unobserved at the target column, slot 2 undefined
  const auto p = make_prof(0, {1.0, 0.5, 2.0}, {1, 1, 0});
  const std::vector<std::uint8_t> mask{1, 1, 0, 1};
  const auto w = awnn_weights(p, mask, 1.0, 0.5);
  CHECK(w.weights[1] == 0.0);
  CHECK(w.weights[2] == 0.0);
  CHECK(w.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("adaptive weights error conditions") {
  const auto p = make_prof(0, {1.0}, {1});
  const std::vector<std::uint8_t> mask{1, 1};
  CHECK_THROWS_AS(awnn_weights(p, mask, 0.0, 1.0), NonPositiveVariance);
  CHECK_THROWS(awnn_weights(p, mask, 1.0, 0.0));
  CHECK_THROWS_AS(awnn_weights(p, std::vector<std::uint8_t>{1}, 1.0, 1.0), DimensionMismatch);
  const auto undef = make_prof(0, {1.0}, {0});
  CHECK_THROWS_AS(awnn_weights(undef, mask, 1.0, 1.0), NoObservedDonor);
}

TEST_CASE("adaptive weights match a projected-gradient reference") {
  std::mt19937_64 rng(606);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<double> values(n);
    for (double& x : values) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 5.0;
    const auto p = make_prof(0, values, std::vector<std::uint8_t>(n, 1));
    const double lambda = 0.1 + static_cast<double>(rng() >> 11) * 0x1.0p-53 * 3.0;
    const auto w = awnn_weights(p, std::vector<std::uint8_t>(n + 1, 1), 1.0, lambda);

    std::vector<double> rho_sorted = values;
    std::sort(rho_sorted.begin(), rho_sorted.end());
    const auto ref = qp_reference(rho_sorted, lambda);

    // compare objective values and weights (reference is sorted by rho)
    std::vector<std::pair<double, double>> got(n);
    for (std::size_t k = 0; k < n; ++k) got[k] = {values[k], w.weights[k]};
    std::sort(got.begin(), got.end());
    double sum = 0.0;
    std::vector<double> got_sorted(n);
    for (std::size_t k = 0; k < n; ++k) {
      got_sorted[k] = got[k].second;
      sum += got[k].second;
      CHECK(got[k].second >= 0.0);
      if (k > 0 && got[k].first > got[k - 1].first) {
        CHECK(got[k].second <= got[k - 1].second + 1e-12);  // nonincreasing in rho
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(got_sorted[k] - ref[k]) <= 1e-6);
    }
    CHECK(qp_objective(got_sorted, rho_sorted, lambda) <=
          qp_objective(ref, rho_sorted, lambda) + 1e-9);
  }
}

TEST_CASE("awnn batch estimates observed structure") {
  SyntheticSpec spec;
  spec.n_rows = 20;
  spec.n_cols = 15;
  spec.noise_sd = 0.1;
  spec.propensity = 0.8;
  spec.seed = 99;
  const auto gt = gen_synthetic_scalar(spec);
  const MaskedMatrix& m = gt.matrix;
  std::vector<EntryIndex> targets;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t t = 0; t < m.cols(); ++t) {
      if (!m.observed(i, t)) targets.push_back({i, t});
    }
  }
  REQUIRE(!targets.empty());
  const AwnnBatch batch = impute_awnn(m, targets);
  REQUIRE(batch.estimates.size() == targets.size());
  REQUIRE(batch.weights.size() == targets.size());
  CHECK(batch.state.converged);
  CHECK(batch.state.sigma2 > 0.0);
  double mae = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (!batch.estimates[k]) continue;
    const auto& w = batch.weights[k].weights;
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    mae += std::abs(batch.estimates[k]->value -
                    gt.theta[targets[k].row * m.cols() + targets[k].col]);
    ++n;
  }
  REQUIRE(n > 0);
  // low noise, strong signal: adaptive weights should track theta closely
  CHECK(mae / static_cast<double>(n) < 0.25);
}

TEST_CASE("awnn estimates are the weight-donor inner products") {
  SyntheticSpec spec;
  spec.n_rows = 12;
  spec.n_cols = 9;
  spec.noise_sd = 0.3;
  spec.propensity = 0.7;
  spec.seed = 5;
  const MaskedMatrix m = gen_synthetic_scalar(spec).matrix;
  const std::vector<EntryIndex> targets{{0, 0}, {3, 4}, {7, 8}, {11, 2}};
  const AwnnBatch batch = impute_awnn(m, targets);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (!batch.estimates[k]) continue;
    const auto& w = batch.weights[k].weights;
    double value = 0.0;
    for (std::size_t slot = 0; slot < w.size(); ++slot) {
      if (w[slot] == 0.0) continue;
      const std::size_t j = slot < targets[k].row ? slot : slot + 1;
      REQUIRE(m.observed(j, targets[k].col));
      value += w[slot] * m.at(j, targets[k].col);
    }
    CHECK(batch.estimates[k]->value == doctest::Approx(value).epsilon(1e-12));
  }
}

TEST_CASE("awnn option validation") {
  const MaskedMatrix m = MaskedMatrix::dense({1.0, 2.0, 3.0, 4.0}, 2, 2);
  const std::vector<EntryIndex> t{{0, 0}};
  AwnnOptions bad;
  bad.max_iter = 0;
  CHECK_THROWS(impute_awnn(m, t, bad));
  AwnnOptions bad2;
  bad2.tol = 0.0;
  CHECK_THROWS(impute_awnn(m, t, bad2));
  const MaskedMatrix tiny = MaskedMatrix::build({1.0, 0.0}, {1, 0}, 1, 2);
  CHECK_THROWS_AS(impute_awnn(tiny, t), TooFewSamples);
}

TEST_CASE("awnn serial and parallel agree bit for bit") {
  SyntheticSpec spec;
  spec.n_rows = 16;
  spec.n_cols = 12;
  spec.noise_sd = 0.4;
  spec.propensity = 0.6;
  spec.seed = 44;
  const MaskedMatrix m = gen_synthetic_scalar(spec).matrix;
  const std::vector<EntryIndex> targets = m.observed_entries();
  AwnnOptions serial;
  serial.exec = Exec::Serial;
  AwnnOptions parallel;
  parallel.exec = Exec::Parallel;
  const AwnnBatch a = impute_awnn(m, targets, serial);
  const AwnnBatch b = impute_awnn(m, targets, parallel);
  CHECK(a.state.sigma2 == b.state.sigma2);
  CHECK(a.state.iterations == b.state.iterations);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    REQUIRE(a.estimates[k].has_value() == b.estimates[k].has_value());
    if (a.estimates[k]) CHECK(a.estimates[k]->value == b.estimates[k]->value);
  }
}
