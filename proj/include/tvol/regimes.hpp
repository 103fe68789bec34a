#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvol/estimate.hpp"
#include "tvol/model.hpp"

namespace tvol {

/// Threshold r(h) = c h^beta and, for moderate deviations, scale v_n = n^gamma.
class PowerLawRegime {
 public:
  /// Throws unless gamma, when given, lies in (0, 1/2).
  explicit PowerLawRegime(ThresholdFn threshold, std::optional<double> gamma = std::nullopt);

  const ThresholdFn& threshold() const { return threshold_; }
  const std::optional<double>& gamma() const { return gamma_; }

 private:
  ThresholdFn threshold_;
  std::optional<double> gamma_;
};

/// One asymptotic condition, decided by exponent algebra. `margin` is the slack
/// of the deciding exponent inequality (negative when it fails).
struct ConditionCheck {
  std::string name;
  std::string statement;
  bool pass = false;
  double margin = 0.0;
};

struct RegimeReport {
  std::vector<ConditionCheck> checks;

  bool all_pass() const;
  const ConditionCheck& at(const std::string& name) const;
};

/// Large-deviation admissibility of r(1/n) = c n^-beta:
///   r_to_zero                 r(1/n) -> 0                  iff beta > 0
///   n_r_to_infinity           n r(1/n) -> inf              iff beta < 1
///   log_n_over_n_r_to_zero    log n / (n r(1/n)) -> 0      iff beta < 1
RegimeReport check_ldp(const PowerLawRegime& regime);

/// Moderate-deviation admissibility with v_n = n^gamma:
///   v_to_infinity             v_n -> inf                   iff gamma > 0
///   v_over_sqrt_n_to_zero     v_n / sqrt(n) -> 0           iff gamma < 1/2
///   sqrt_n_v_r_bounded        sqrt(n) v_n r(1/n) = O(1)    iff beta >= 1/2 + gamma
///   r_dominates_increments    r(1/n) / (log(n / v_n^2) max_k int_cell sigma_l^2) -> inf
///                             iff beta < 1 (max_k int_cell sigma^2 = max sigma^2 / n
///                             for piecewise-constant coefficients; automatic when
///                             both volatilities vanish)
/// The boundary beta = 1/2 + gamma is accepted (O(1), not o(1), is required),
/// with an absolute tolerance of 1e-12 on the exponent comparison.
/// Throws std::invalid_argument when gamma is missing.
RegimeReport check_mdp(const PowerLawRegime& regime, const ModelSpec& model);

/// Finite-n values of n r(1/n) and sqrt(n) n^gamma r(1/n), for corroborating the
/// symbolic verdicts.
struct FiniteSampleRow {
  std::size_t n = 0;
  double n_r = 0.0;
  double sqrt_n_v_r = 0.0;
};
std::vector<FiniteSampleRow> finite_sample_profile(const PowerLawRegime& regime,
                                                   const std::vector<std::size_t>& ns);

}  // namespace tvol
