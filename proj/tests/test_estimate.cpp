#include <doctest.h>

#include <cmath>
#include <limits>

#include "tvol/estimate.hpp"
#include "tvol/simulate.hpp"

using namespace tvol;

namespace {

SampledPath path_from(std::vector<double> dx1, std::vector<double> dx2) {
  SampledPath p;
  p.resize(dx1.size());
  p.dx1 = std::move(dx1);
  p.dx2 = std::move(dx2);
  return p;
}

ModelSpec jumpy() {
  return ModelSpec::constant(1.0, 0.8, 0.4)
      .with_jumps({5.0, GaussianJumps{}}, {5.0, GaussianJumps{}}, JumpCoupling::Independent);
}

}  // namespace

TEST_CASE("threshold function values and validation") {
  const ThresholdFn r(2.0, 0.5);
  CHECK(r.at_step(0.25) == doctest::Approx(1.0));
  CHECK(r.for_grid(100) == doctest::Approx(0.2));
  CHECK_THROWS_AS(ThresholdFn(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdFn(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdFn(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(r.for_grid(0), std::invalid_argument);
}

TEST_CASE("hand-computed threshold sums") {
  const auto p = path_from({0.125, 0.75, -0.25, 0.5}, {0.25, 0.125, 0.5, -1.0});
  const auto v = threshold_vector(p, 0.25, 4);
  // Leg 1 drops 0.75; 0.5 sits on the boundary and is kept.
  CHECK(v.q1 == 0.015625 + 0.0625 + 0.25);
  // Leg 2 drops -1.
  CHECK(v.q2 == 0.0625 + 0.015625 + 0.25);
  // Both legs small: cells 1 and 3.
  CHECK(v.c == 0.03125 - 0.125);
  const auto all = realized_vector(p, 4);
  CHECK(all.q1 == 0.015625 + 0.5625 + 0.0625 + 0.25);
  CHECK(all.c == 0.03125 + 0.09375 - 0.125 - 0.5);
  CHECK_THROWS_AS(threshold_vector(p, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(threshold_vector(p, 1.0, 5), std::out_of_range);
}

TEST_CASE("infinite threshold reproduces the realized vector") {
  const auto s = simulate_path(jumpy(), 1000, 4);
  const auto a = threshold_vector(s.path, std::numeric_limits<double>::infinity(), 1000);
  const auto b = realized_vector(s.path, 1000);
  CHECK(a == b);
}

TEST_CASE("threshold sums of squares are monotone in r") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = simulate_path(jumpy(), 800, seed);
    VolVector prev = threshold_vector(s.path, 1e-6, 800);
    for (double r : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const auto v = threshold_vector(s.path, r, 800);
      CHECK(v.q1 >= prev.q1);
      CHECK(v.q2 >= prev.q2);
      prev = v;
    }
  }
}

TEST_CASE("threshold estimate satisfies Cauchy-Schwarz") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = simulate_path(jumpy(), 500, seed);
    for (double r : {1e-3, 1e-2, 1.0}) {
      const auto v = threshold_vector(s.path, r, 500);
      CHECK(v.c * v.c <= v.q1 * v.q2 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("realized cross term obeys the polarization identity") {
  const auto s = simulate_path(jumpy(), 1000, 8);
  const auto v = realized_vector(s.path, 1000);
  double q3 = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) q3 += std::pow(s.path.dx1[k] + s.path.dx2[k], 2);
  CHECK(v.c == doctest::Approx(0.5 * (q3 - v.q1 - v.q2)).epsilon(1e-12));
}

TEST_CASE("running estimator ends at the full-grid estimate") {
  const auto s = simulate_path(jumpy(), 1000, 9);
  const double r = ThresholdFn(6.0, 0.9).for_grid(1000);
  const auto run = running_estimator(s.path, r);
  REQUIRE(run.size() == 1000);
  const auto last = threshold_vector(s.path, r, 1000);
  CHECK(run.back().q1 == doctest::Approx(last.q1).epsilon(1e-14));
  CHECK(run.back().c == doctest::Approx(last.c).epsilon(1e-14));
  CHECK(run[499].q2 == doctest::Approx(threshold_vector(s.path, r, 500).q2).epsilon(1e-14));
  for (std::size_t k = 1; k < run.size(); ++k) CHECK(run[k].q1 >= run[k - 1].q1);
}

TEST_CASE("full quadratic variation adds the jump truth") {
  const auto m = jumpy();
  const auto s = simulate_path(m, 100, 2);
  const auto qv = full_quadratic_variation(m, s.truth);
  CHECK(qv.q1 == doctest::Approx(1.0 + s.truth.sum_sq1));
  CHECK(qv.q2 == doctest::Approx(0.64 + s.truth.sum_sq2));
  CHECK(qv.c == doctest::Approx(0.32 + s.truth.sum_cross));
}
