#include "tvol/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvol {

CoefficientFunction::CoefficientFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() < 2) {
    throw std::invalid_argument("coefficient function needs at least two breakpoints");
  }
  if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
    throw std::invalid_argument("coefficient breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw std::invalid_argument("coefficient breakpoints must be strictly increasing");
    }
  }
  if (values_.size() + 1 != breakpoints_.size()) {
    throw std::invalid_argument("coefficient function needs one value per piece (got " +
                                std::to_string(values_.size()) + " values for " +
                                std::to_string(breakpoints_.size() - 1) + " pieces)");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("coefficient values must be finite");
  }
}

CoefficientFunction CoefficientFunction::constant(double value) {
  return CoefficientFunction({0.0, 1.0}, {value});
}

std::size_t CoefficientFunction::piece_index(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::out_of_range("coefficient evaluated outside [0, 1]: t = " + std::to_string(t));
  }
  // First breakpoint strictly greater than t; the piece starts one before it.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto idx = static_cast<std::size_t>(it - breakpoints_.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, values_.size() - 1);
}

double CoefficientFunction::operator()(double t) const { return values_[piece_index(t)]; }

bool CoefficientFunction::is_constant() const {
  return std::all_of(values_.begin(), values_.end(), [&](double v) { return v == values_.front(); });
}

double CoefficientFunction::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double CoefficientFunction::max_value() const { return *std::max_element(values_.begin(), values_.end()); }
double CoefficientFunction::max_abs() const { return std::max(std::abs(min_value()), std::abs(max_value())); }

double CoefficientFunction::integrate(double a, double b) const {
  if (!(0.0 <= a && a <= b && b <= 1.0)) throw std::invalid_argument("integrate: need 0 <= a <= b <= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double lo = std::max(a, breakpoints_[i]);
    const double hi = std::min(b, breakpoints_[i + 1]);
    if (hi > lo) sum += values_[i] * (hi - lo);
  }
  return sum;
}

double eval(const CoefficientFunction& f, double t) { return f(t); }

void JumpSpec::validate() const {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("jump intensity must be finite and >= 0");
  }
  std::visit(
      [](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, GaussianJumps>) {
          if (!(law.stddev > 0.0) || !std::isfinite(law.mean)) {
            throw std::invalid_argument("gaussian jump law needs stddev > 0");
          }
        } else if constexpr (std::is_same_v<T, FixedSignedJumps>) {
          if (!(law.magnitude > 0.0)) throw std::invalid_argument("fixed jump magnitude must be > 0");
          if (!(law.up_probability >= 0.0 && law.up_probability <= 1.0)) {
            throw std::invalid_argument("fixed jump up-probability must lie in [0, 1]");
          }
        } else {
          if (!(law.scale > 0.0)) throw std::invalid_argument("laplace jump scale must be > 0");
        }
      },
      size_law);
}

ModelSpec::ModelSpec(CoefficientFunction sigma1, CoefficientFunction sigma2, CoefficientFunction rho,
                     CoefficientFunction drift1, CoefficientFunction drift2, JumpSpec jumps1,
                     JumpSpec jumps2, JumpCoupling coupling)
    : sigma1_(std::move(sigma1)),
      sigma2_(std::move(sigma2)),
      rho_(std::move(rho)),
      drift1_(std::move(drift1)),
      drift2_(std::move(drift2)),
      jumps1_(jumps1),
      jumps2_(jumps2),
      coupling_(coupling) {
  if (sigma1_.min_value() < 0.0 || sigma2_.min_value() < 0.0) {
    throw std::invalid_argument("volatilities must be nonnegative");
  }
  if (!(rho_.max_abs() < 1.0)) throw std::invalid_argument("correlation must satisfy |rho| < 1");
  jumps1_.validate();
  jumps2_.validate();
  if (coupling_ == JumpCoupling::CommonClock && jumps1_.intensity != jumps2_.intensity) {
    throw std::invalid_argument("common-clock jumps need equal intensities on both legs");
  }
}

ModelSpec ModelSpec::constant(double sigma1, double sigma2, double rho) {
  return ModelSpec(CoefficientFunction::constant(sigma1), CoefficientFunction::constant(sigma2),
                   CoefficientFunction::constant(rho), CoefficientFunction::constant(0.0),
                   CoefficientFunction::constant(0.0), JumpSpec::none(), JumpSpec::none());
}

bool ModelSpec::has_drift() const { return drift1_.max_abs() > 0.0 || drift2_.max_abs() > 0.0; }

bool ModelSpec::constant_diffusion() const {
  return sigma1_.is_constant() && sigma2_.is_constant() && rho_.is_constant();
}

ModelSpec ModelSpec::with_jumps(JumpSpec jumps1, JumpSpec jumps2, JumpCoupling coupling) const {
  return ModelSpec(sigma1_, sigma2_, rho_, drift1_, drift2_, jumps1, jumps2, coupling);
}

ModelSpec ModelSpec::with_drift(CoefficientFunction drift1, CoefficientFunction drift2) const {
  return ModelSpec(sigma1_, sigma2_, rho_, std::move(drift1), std::move(drift2), jumps1_, jumps2_,
                   coupling_);
}

std::vector<double> merge_breakpoints(std::span<const CoefficientFunction* const> fs) {
  std::vector<double> out;
  for (const auto* f : fs) out.insert(out.end(), f->breakpoints().begin(), f->breakpoints().end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double integrate_product(const ModelSpec& model, ProductKind kind, double a, double b) {
  if (!(0.0 <= a && a <= b && b <= 1.0)) {
    throw std::invalid_argument("integrate_product: need 0 <= a <= b <= 1");
  }
  const CoefficientFunction* fs[] = {&model.sigma1(), &model.sigma2(), &model.rho()};
  const auto grid = merge_breakpoints(fs);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double lo = std::max(a, grid[i]);
    const double hi = std::min(b, grid[i + 1]);
    if (!(hi > lo)) continue;
    const double s1 = model.sigma1()(grid[i]);
    const double s2 = model.sigma2()(grid[i]);
    double integrand = 0.0;
    switch (kind) {
      case ProductKind::Var1: integrand = s1 * s1; break;
      case ProductKind::Var2: integrand = s2 * s2; break;
      case ProductKind::Cov: integrand = s1 * s2 * model.rho()(grid[i]); break;
    }
    sum += integrand * (hi - lo);
  }
  return sum;
}

VolVector true_vol_vector(const ModelSpec& model, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("true_vol_vector: t outside [0, 1]");
  return {integrate_product(model, ProductKind::Var1, 0.0, t),
          integrate_product(model, ProductKind::Var2, 0.0, t),
          integrate_product(model, ProductKind::Cov, 0.0, t)};
}

}  // namespace tvol
