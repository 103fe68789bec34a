#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tvol/model.hpp"
#include "tvol/model_file.hpp"

using namespace tvol;

TEST_CASE("coefficient function is right-continuous and closes at t = 1") {
  const CoefficientFunction f({0.0, 0.25, 0.5, 1.0}, {1.0, 2.0, 3.0});
  CHECK(f(0.0) == 1.0);
  CHECK(f(0.2499) == 1.0);
  CHECK(f(0.25) == 2.0);
  CHECK(f(0.5) == 3.0);
  CHECK(f(1.0) == 3.0);
  CHECK(f.piece_index(1.0) == 2);
  CHECK_THROWS_AS(f(1.0001), std::out_of_range);
  CHECK_THROWS_AS(f(-0.1), std::out_of_range);
  CHECK(f.integrate(0.0, 1.0) == doctest::Approx(0.25 + 0.5 + 1.5));
  CHECK(f.integrate(0.1, 0.3) == doctest::Approx(0.15 * 1.0 + 0.05 * 2.0));
  CHECK(f.min_value() == 1.0);
  CHECK(f.max_value() == 3.0);
  CHECK_FALSE(f.is_constant());
}

TEST_CASE("coefficient function validation") {
  CHECK_THROWS_AS(CoefficientFunction({0.0, 0.5}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientFunction({0.0, 0.6, 0.5, 1.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientFunction({0.0, 1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientFunction({0.0, 1.0}, {std::nan("")}), std::invalid_argument);
  CHECK_NOTHROW(CoefficientFunction::constant(0.7));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(ModelSpec::constant(1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::constant(-0.1, 1.0, 0.0), std::invalid_argument);
  CHECK_NOTHROW(ModelSpec::constant(0.0, 1.0, 0.0));
  const auto base = ModelSpec::constant(1.0, 1.0, 0.0);
  CHECK_THROWS_AS(base.with_jumps({-1.0, GaussianJumps{}}, JumpSpec::none(), JumpCoupling::Independent),
                  std::invalid_argument);
  CHECK_THROWS_AS(base.with_jumps({1.0, LaplaceJumps{0.0}}, JumpSpec::none(), JumpCoupling::Independent),
                  std::invalid_argument);
  CHECK_THROWS_AS(base.with_jumps({1.0, FixedSignedJumps{1.0, 1.5}}, JumpSpec::none(), JumpCoupling::Independent),
                  std::invalid_argument);
  CHECK_THROWS_AS(base.with_jumps({1.0, GaussianJumps{}}, {2.0, GaussianJumps{}}, JumpCoupling::CommonClock),
                  std::invalid_argument);
  CHECK_NOTHROW(base.with_jumps({2.0, GaussianJumps{}}, {2.0, LaplaceJumps{}}, JumpCoupling::CommonClock));
}

TEST_CASE("integrated volatility vector matches a segment-wise sum") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 30; ++i) {
    const auto m = oracle::random_piecewise_model(gen);
    const auto v = true_vol_vector(m, 1.0);
    const auto ref = oracle::integrated_exact(m);
    CHECK(v.q1 == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(v.q2 == doctest::Approx(ref[1]).epsilon(1e-12));
    CHECK(v.c == doctest::Approx(ref[2]).epsilon(1e-12));
  }
}

TEST_CASE("integrals are additive over dyadic splits") {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 20; ++i) {
    const auto m = oracle::random_piecewise_model(gen);
    for (auto kind : {ProductKind::Var1, ProductKind::Var2, ProductKind::Cov}) {
      const double whole = integrate_product(m, kind, 0.0, 1.0);
      double parts = 0.0;
      for (int k = 0; k < 16; ++k) parts += integrate_product(m, kind, k / 16.0, (k + 1) / 16.0);
      CHECK(parts == doctest::Approx(whole).epsilon(1e-12));
    }
  }
}

TEST_CASE("constant model has closed-form integrated vector") {
  const auto m = ModelSpec::constant(2.0, 0.5, -0.4);
  const auto v = true_vol_vector(m, 0.5);
  CHECK(v.q1 == doctest::Approx(2.0));
  CHECK(v.q2 == doctest::Approx(0.125));
  CHECK(v.c == doctest::Approx(0.5 * 2.0 * 0.5 * -0.4));
  CHECK(m.constant_diffusion());
  CHECK_FALSE(m.has_jumps());
  CHECK_FALSE(m.has_drift());
}

TEST_CASE("model file round trip") {
  const std::string text = R"(jump_coupling = common_clock

[sigma1]
breakpoints = 0, 0.5, 1
values = 1.0, 2.0

[sigma2]
value = 0.7

[rho]
value = 0.3

[drift1]
value = 0.1

[jumps1]
intensity = 4
law = gaussian
mean = 0
stddev = 0.5

[jumps2]
intensity = 4
law = fixed_signed
magnitude = 1
up_probability = 0.25
)";
  const auto m = parse_model_text(text);
  CHECK(m.coupling() == JumpCoupling::CommonClock);
  CHECK(m.sigma1()(0.75) == 2.0);
  CHECK(m.sigma2()(0.1) == 0.7);
  CHECK(m.drift1()(0.3) == 0.1);
  CHECK(m.drift2()(0.3) == 0.0);
  CHECK(std::get<FixedSignedJumps>(m.jumps2().size_law).up_probability == 0.25);
  const auto again = parse_model_text(model_to_text(m));
  CHECK(model_to_text(again) == model_to_text(m));
  CHECK(true_vol_vector(again, 1.0) == true_vol_vector(m, 1.0));
}

TEST_CASE("model file errors") {
  CHECK_THROWS_AS(parse_model_text("[sigma1]\nvalue = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_text("[sigma1]\nvalue = 1\n[sigma2]\nvalue = 1\nbogus = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_text("[sigma1]\nvalue = x\n[sigma2]\nvalue = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_text("[sigma1]\nvalue = 1\n[sigma2]\nvalue = 1\n[rho]\nvalue = 1.2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_model_text("[sigma1]\nvalue = 1\n[sigma2]\nvalue = 1\n[jumps1]\nlaw = cauchy\n"),
                  std::invalid_argument);
  const std::string missing = "/nonexistent/dir/model.ini";
  try {
    load_model_file(missing);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
}
