#include "tvol/regimes.hpp"

#include <cmath>
#include <stdexcept>

namespace tvol {

namespace {
constexpr double kExponentTol = 1e-12;
}

PowerLawRegime::PowerLawRegime(ThresholdFn threshold, std::optional<double> gamma)
    : threshold_(threshold), gamma_(gamma) {
  if (gamma_ && !(*gamma_ > 0.0 && *gamma_ < 0.5)) {
    throw std::invalid_argument("scale exponent gamma must lie in (0, 1/2)");
  }
}

bool RegimeReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const ConditionCheck& RegimeReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no condition named '" + name + "'");
}

RegimeReport check_ldp(const PowerLawRegime& regime) {
  const double beta = regime.threshold().exponent();
  RegimeReport r;
  r.checks.push_back({"r_to_zero", "r(1/n) -> 0 (beta > 0)", beta > 0.0, beta});
  r.checks.push_back({"n_r_to_infinity", "n r(1/n) -> inf (beta < 1)", beta < 1.0, 1.0 - beta});
  r.checks.push_back(
      {"log_n_over_n_r_to_zero", "log n / (n r(1/n)) -> 0 (beta < 1)", beta < 1.0, 1.0 - beta});
  return r;
}

RegimeReport check_mdp(const PowerLawRegime& regime, const ModelSpec& model) {
  if (!regime.gamma()) throw std::invalid_argument("check_mdp needs the scale exponent gamma");
  const double beta = regime.threshold().exponent();
  const double gamma = *regime.gamma();
  RegimeReport r;
  r.checks.push_back({"v_to_infinity", "v_n -> inf (gamma > 0)", gamma > 0.0, gamma});
  r.checks.push_back(
      {"v_over_sqrt_n_to_zero", "v_n / sqrt(n) -> 0 (gamma < 1/2)", gamma < 0.5, 0.5 - gamma});
  const double bounded_margin = beta - (0.5 + gamma);
  r.checks.push_back({"sqrt_n_v_r_bounded", "sqrt(n) v_n r(1/n) = O(1) (beta >= 1/2 + gamma)",
                      bounded_margin >= -kExponentTol, bounded_margin});
  const double max_var = std::max(std::pow(model.sigma1().max_abs(), 2), std::pow(model.sigma2().max_abs(), 2));
  if (max_var == 0.0) {
    r.checks.push_back({"r_dominates_increments",
                        "r(1/n) / (log(n/v_n^2) max_k int sigma^2) -> inf (no diffusion)", true,
                        1.0 - beta});
  } else {
    r.checks.push_back({"r_dominates_increments",
                        "r(1/n) / (log(n/v_n^2) max_k int sigma^2) -> inf (beta < 1)", beta < 1.0,
                        1.0 - beta});
  }
  return r;
}

std::vector<FiniteSampleRow> finite_sample_profile(const PowerLawRegime& regime,
                                                   const std::vector<std::size_t>& ns) {
  std::vector<FiniteSampleRow> out;
  const double gamma = regime.gamma().value_or(0.0);
  for (std::size_t n : ns) {
    const double dn = static_cast<double>(n);
    const double r = regime.threshold().for_grid(n);
    out.push_back({n, dn * r, std::sqrt(dn) * std::pow(dn, gamma) * r});
  }
  return out;
}

}  // namespace tvol
