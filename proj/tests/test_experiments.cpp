#include <doctest.h>

#include <cmath>

#include "tvol/experiments.hpp"
#include "tvol/rates.hpp"

using namespace tvol;

namespace {

ModelSpec unit_model() { return ModelSpec::constant(1.0, 1.0, 0.0); }

ModelSpec jump_model(JumpSizeLaw law = GaussianJumps{}) {
  return unit_model().with_jumps({5.0, law}, {5.0, law}, JumpCoupling::Independent);
}

// Chi-square upper tail for an even number of degrees of freedom 2k:
// exp(-x) sum_{j<k} x^j / j! with x = t / 2.
double chi2_tail_even(int dof, double t) {
  const double x = t / 2.0;
  double term = std::exp(-x), sum = 0.0;
  for (int j = 0; j < dof / 2; ++j) {
    sum += term;
    term *= x / (j + 1);
  }
  return sum;
}

}  // namespace

TEST_CASE("chi-square oracle") {
  CHECK(chi2_tail_exact(2, 1.0, 1.0) == doctest::Approx(0.3678794412).epsilon(1e-10));
  CHECK(chi2_tail_exact(1, 1.0, 1.0) == doctest::Approx(0.3173105079).epsilon(1e-9));
  CHECK(chi2_tail_exact(30, 1e-12, 1.0) == doctest::Approx(1.0));
  for (int n : {2, 10, 30, 100}) {
    for (double a : {0.5, 1.0, 1.8, 3.0}) {
      CHECK(chi2_tail_exact(n, a, 1.0) == doctest::Approx(chi2_tail_even(n, n * a)).epsilon(1e-12));
      // Scaling sigma^2 and a together leaves the probability unchanged.
      CHECK(chi2_tail_exact(n, 2.5 * a, 2.5) == doctest::Approx(chi2_tail_exact(n, a, 1.0)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(chi2_tail_exact(0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_tail_exact(5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_tail_exact(5, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("harder events have larger exact slopes") {
  for (int n : {25, 100, 400}) {
    double prev = 0.0;
    for (double a : {1.2, 1.5, 1.8, 2.5}) {
      const double slope = -std::log(chi2_tail_exact(n, a, 1.0)) / n;
      CHECK(slope > prev);
      prev = slope;
    }
  }
}

TEST_CASE("Wilson interval") {
  const auto z = wilson_interval(0, 100);
  CHECK(z.low == 0.0);
  const double z2 = 1.959963984540054 * 1.959963984540054;
  CHECK(z.high == doctest::Approx(z2 / (100.0 + z2)));
  const auto h = wilson_interval(50, 100);
  CHECK(h.low + h.high == doctest::Approx(1.0));
  CHECK(h.low < 0.5);
  CHECK(h.high > 0.5);
  const auto all = wilson_interval(100, 100);
  CHECK(all.high == 1.0);
  CHECK_THROWS_AS(wilson_interval(0, 0), std::invalid_argument);
}

TEST_CASE("zero hits give a one-sided bound") {
  const auto t = make_tail_estimate(50, 1000, 0, 50.0);
  CHECK(t.lower_bound_only);
  CHECK(t.p_hat == 0.0);
  CHECK(t.neg_log_over_speed == doctest::Approx(-std::log(t.ci_high) / 50.0));
  CHECK(std::isfinite(t.neg_log_over_speed));
  const auto u = make_tail_estimate(50, 1000, 10, 50.0);
  CHECK_FALSE(u.lower_bound_only);
  CHECK(u.neg_log_over_speed == doctest::Approx(-std::log(0.01) / 50.0));
}

TEST_CASE("results do not depend on the worker count") {
  ExperimentSetup one{jump_model(), ThresholdFn(6.0, 0.9), std::nullopt, 1};
  ExperimentSetup many = one;
  many.workers = 3;
  const auto a = sample_estimates(one, 300, 40, 5);
  const auto b = sample_estimates(many, 300, 40, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK_FALSE(a[0] == a[1]);
}

TEST_CASE("worker failures propagate") {
  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 2};
  CHECK_THROWS_AS(map_paths(setup, 10, 10, 1,
                            [](std::size_t i, const SimulationResult&) -> int {
                              if (i == 7) throw std::runtime_error("boom");
                              return 0;
                            }),
                  std::runtime_error);
}

TEST_CASE("estimate_tail edge events") {
  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 1};
  EventSpec certain;
  certain.level = 0.0;
  const auto c = estimate_tail(setup, certain, 30, 1000, 1);
  CHECK(c.p_hat == 1.0);
  CHECK(c.neg_log_over_speed == 0.0);
  EventSpec impossible;
  impossible.level = 1e6;
  const auto i = estimate_tail(setup, impossible, 30, 1000, 1);
  CHECK(i.p_hat == 0.0);
  CHECK(i.lower_bound_only);
  CHECK_THROWS_AS(estimate_tail(setup, certain, 30, 999, 1), std::invalid_argument);
}

TEST_CASE("Monte Carlo covers the exact tail in at least 93 of 100 seeds") {
  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 1};
  EventSpec ev;
  ev.level = 1.4;
  const double exact = chi2_tail_exact(30, 1.4, 1.0);
  int covered = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto t = estimate_tail(setup, ev, 30, 1000, seed * 7919);
    if (t.ci_low <= exact && exact <= t.ci_high) ++covered;
  }
  CHECK(covered >= 93);
}

TEST_CASE("ldp slope uses the exact oracle and shrinks towards the contraction") {
  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 1};
  EventSpec ev;
  ev.level = 1.8;
  REQUIRE(exact_oracle_applies(setup, ev));
  const auto rep = ldp_slope(setup, ev, {25, 50, 100, 200, 400}, 1000, 1);
  CHECK(rep.source == "exact");
  CHECK(rep.reference == doctest::Approx(0.5 * (0.8 - std::log(1.8))).epsilon(1e-9));
  CHECK(rep.gap_shrinking);
  CHECK(std::abs(rep.rows.back().gap) / rep.reference < 0.1);
  // Level at the mean: zero rate and probability near one half.
  ev.level = 1.0;
  const auto flat = ldp_slope(setup, ev, {25, 400}, 1000, 1);
  CHECK(flat.reference == 0.0);
  CHECK(flat.rows.back().slope < 0.01);
  CHECK_THROWS_AS(ldp_slope(setup, ev, {50, 25}, 1000, 1), std::invalid_argument);
}

TEST_CASE("ldp slopes through the cross coordinate agree with polarized sums") {
  ExperimentSetup setup{ModelSpec::constant(1.0, 1.0, 0.3), std::nullopt, std::nullopt, 1};
  EventSpec ev;
  ev.direction = Eigen::Vector3d(1.0, 1.0, 2.0).normalized();
  ev.level = 2.6 * 1.8 / std::sqrt(6.0);
  REQUIRE_FALSE(exact_oracle_applies(setup, ev));
  const std::size_t n = 20, reps = 4000;
  const auto rep = ldp_slope(setup, ev, {n}, reps, 3);
  // The same paths, counted through Q3 = sum (dX1 + dX2)^2.
  const auto hits = map_paths(setup, n, reps, 3, [&](std::size_t, const SimulationResult& s) {
    double q3 = 0.0;
    for (std::size_t k = 0; k < n; ++k) q3 += std::pow(s.path.dx1[k] + s.path.dx2[k], 2);
    return static_cast<int>(q3 / std::sqrt(6.0) >= ev.level);
  });
  double count = 0.0;
  for (int h : hits) count += h;
  CHECK(rep.rows[0].p_hat == count / reps);
  CHECK(rep.rows[0].p_hat > 0.0);
}

TEST_CASE("consistency: threshold errors shrink while plain errors carry the jump bias") {
  ExperimentSetup setup{jump_model(), ThresholdFn(6.0, 0.9), std::nullopt, 1};
  const auto rows = run_consistency(setup, {100, 1000, 10000}, 40, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].threshold_mae[0] < rows[0].threshold_mae[0]);
  CHECK(rows[2].threshold_mae[0] < rows[1].threshold_mae[0]);
  CHECK(rows[2].threshold_mae[0] < 0.1);
  CHECK(rows[2].plain_mae[0] > 1.0);
  CHECK_THROWS_AS(run_consistency(setup, {}, 10, 1), std::invalid_argument);

  // Without jumps and with a threshold nothing reaches, both estimators coincide.
  ExperimentSetup calm{unit_model(), ThresholdFn(1e6, 0.5), std::nullopt, 1};
  const auto same = run_consistency(calm, {200}, 20, 4);
  CHECK(same[0].threshold_mae == same[0].plain_mae);
}

TEST_CASE("clt covariance on a small jump-free run matches the limiting covariance") {
  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 1};
  const auto rep = run_clt(setup, 200, 4000, 6);
  CHECK(rep.max_rel_diag_err_hessian < 0.1);
  CHECK(rep.max_abs_offdiag < 0.15);
  CHECK(rep.lambda_hessian(0, 0) == doctest::Approx(2.0));
  CHECK(rep.sigma1(2, 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(run_clt(setup, 200, 999, 6), std::invalid_argument);

  ExperimentSetup flat{ModelSpec::constant(0.0, 0.0, 0.0), std::nullopt, std::nullopt, 1};
  const auto zero = run_clt(flat, 50, 1000, 1);
  CHECK(zero.sample_cov.isZero());
  CHECK(zero.sample_mean.isZero());
}

TEST_CASE("mdp slope preconditions and oracle agreement") {
  EventSpec ev;
  ev.statistic = Statistic::MdpScaled;
  ev.level = 1.0;
  ev.gamma = 0.1;
  ExperimentSetup bad{jump_model(), ThresholdFn(1.0, 0.5), std::nullopt, 1};
  CHECK_THROWS_AS(mdp_slope(bad, ev, {1000}, 1000, 1), std::invalid_argument);
  ExperimentSetup raw_jumps{jump_model(), std::nullopt, std::nullopt, 1};
  CHECK_THROWS_AS(mdp_slope(raw_jumps, ev, {1000}, 1000, 1), std::invalid_argument);

  ExperimentSetup setup{unit_model(), std::nullopt, std::nullopt, 1};
  const auto rep = mdp_slope(setup, ev, {100, 1000}, 4000, 9);
  CHECK(rep.reference == doctest::Approx(0.25));
  CHECK(rep.rows[0].reference_sigma1 == doctest::Approx(0.5));
  for (const auto& row : rep.rows) {
    const double p = std::exp(-row.oracle_slope * row.speed);
    CHECK(row.ci_low <= p);
    CHECK(p <= row.ci_high);
  }

  // Median event: probability near one half and slope near zero.
  ev.level = 0.0;
  const auto median = mdp_slope(setup, ev, {2000}, 2000, 1);
  CHECK(std::abs(median.rows[0].p_hat - 0.5) < 0.05);
  CHECK(median.reference == 0.0);
}

TEST_CASE("mdp oracle slope approaches the quadratic rate") {
  // n Q_1 is chi-square, so the scaled event has an exact probability.
  const double gamma = 0.1;
  double prev_gap = 1e9;
  for (double n : {1e4, 1e6, 1e8}) {
    const double q = 1.0 + std::pow(n, gamma) / std::sqrt(n);
    const double slope = -std::log(chi2_tail_exact(static_cast<std::size_t>(n), q, 1.0)) / std::pow(n, 2 * gamma);
    const double gap = std::abs(slope - 0.25);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap / 0.25 < 0.35);
}

TEST_CASE("jump filter report") {
  ExperimentSetup gauss{jump_model(), ThresholdFn(6.0, 0.9), std::nullopt, 1};
  const auto g = jump_filter_report(gauss, 10000, 20, 1);
  CHECK(g.has_jump_cells);
  CHECK(g.flagged_fraction[0] > 0.9);
  ExperimentSetup fixed{jump_model(FixedSignedJumps{1.0, 0.5}), ThresholdFn(1.0, 0.9), std::nullopt, 1};
  const auto f = jump_filter_report(fixed, 10000, 20, 1);
  CHECK(f.flagged_fraction[0] > 0.999);
  CHECK(f.flagged_fraction[1] > 0.999);
  ExperimentSetup none{unit_model(), ThresholdFn(1.0, 0.9), std::nullopt, 1};
  const auto z = jump_filter_report(none, 1000, 5, 1);
  CHECK_FALSE(z.has_jump_cells);
  CHECK(z.flagged_fraction[0] == 0.0);
  ExperimentSetup raw{jump_model(), std::nullopt, std::nullopt, 1};
  CHECK_THROWS_AS(jump_filter_report(raw, 100, 5, 1), std::invalid_argument);
}
