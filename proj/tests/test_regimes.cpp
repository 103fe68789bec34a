#include <doctest.h>

#include <cmath>

#include "tvol/regimes.hpp"

using namespace tvol;

namespace {

const ModelSpec kUnit = ModelSpec::constant(1.0, 1.0, 0.0);

RegimeReport mdp(double beta, double gamma) {
  return check_mdp(PowerLawRegime(ThresholdFn(1.0, beta), gamma), kUnit);
}

}  // namespace

TEST_CASE("moderate-deviation verdicts follow the exponent algebra") {
  // sqrt(n) n^gamma n^-beta = n^(1/2 + gamma - beta) stays bounded iff beta >= 1/2 + gamma.
  const auto a = mdp(0.6, 0.05);
  CHECK(a.all_pass());
  CHECK(a.at("sqrt_n_v_r_bounded").margin == doctest::Approx(0.05));
  const auto b = mdp(0.9, 0.3);
  CHECK(b.all_pass());
  CHECK(b.at("sqrt_n_v_r_bounded").margin == doctest::Approx(0.1));
  const auto c = mdp(0.5, 0.2);
  CHECK_FALSE(c.all_pass());
  int failures = 0;
  for (const auto& chk : c.checks) failures += chk.pass ? 0 : 1;
  CHECK(failures == 1);
  CHECK_FALSE(c.at("sqrt_n_v_r_bounded").pass);
  CHECK(c.at("sqrt_n_v_r_bounded").margin == doctest::Approx(-0.2));
  // The boundary beta = 1/2 + gamma is still bounded.
  CHECK(mdp(0.75, 0.25).at("sqrt_n_v_r_bounded").pass);
  CHECK_THROWS_AS(c.at("no_such_condition"), std::out_of_range);
}

TEST_CASE("large-deviation conditions hold on the whole open interval") {
  for (double beta : {0.05, 0.5, 0.95}) {
    const auto rep = check_ldp(PowerLawRegime(ThresholdFn(3.0, beta)));
    CHECK(rep.all_pass());
    CHECK(rep.at("r_to_zero").margin == doctest::Approx(beta));
    CHECK(rep.at("n_r_to_infinity").margin == doctest::Approx(1.0 - beta));
    CHECK(rep.at("log_n_over_n_r_to_zero").pass);
  }
}

TEST_CASE("regime inputs are validated") {
  CHECK_THROWS_AS(PowerLawRegime(ThresholdFn(1.0, 0.7), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(PowerLawRegime(ThresholdFn(1.0, 0.7), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(check_mdp(PowerLawRegime(ThresholdFn(1.0, 0.7)), kUnit), std::invalid_argument);
}

TEST_CASE("verdicts are monotone in the exponents") {
  // Raising beta or lowering gamma never breaks an admissible regime.
  for (int gi = 1; gi < 10; ++gi) {
    const double gamma = 0.05 * gi;
    bool seen_pass = false;
    for (int bi = 1; bi < 20; ++bi) {
      const bool pass = mdp(0.05 * bi, gamma).all_pass();
      if (seen_pass) CHECK(pass);
      seen_pass = seen_pass || pass;
    }
  }
  for (int bi = 1; bi < 20; ++bi) {
    const double beta = 0.05 * bi;
    bool seen_fail = false;
    for (int gi = 1; gi < 10; ++gi) {
      const bool pass = mdp(beta, 0.05 * gi).all_pass();
      if (seen_fail) CHECK_FALSE(pass);
      seen_fail = seen_fail || !pass;
    }
  }
}

TEST_CASE("diffusion-free models pass the increment clause trivially") {
  const auto rep = check_mdp(PowerLawRegime(ThresholdFn(1.0, 0.9), 0.2), ModelSpec::constant(0.0, 0.0, 0.0));
  CHECK(rep.at("r_dominates_increments").pass);
}

TEST_CASE("finite-sample profile tracks the power laws") {
  const PowerLawRegime regime(ThresholdFn(2.0, 0.8), 0.2);
  const auto rows = finite_sample_profile(regime, {100, 10000});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_r == doctest::Approx(2.0 * std::pow(100.0, 0.2)));
  CHECK(rows[1].sqrt_n_v_r == doctest::Approx(2.0 * std::pow(10000.0, 0.5 + 0.2 - 0.8)));
  CHECK(rows[1].sqrt_n_v_r < rows[0].sqrt_n_v_r);
}
