#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace tvol {

/// Point (q1, q2, c) in R^3: an integrated variance/covariance triple, either
/// estimated from data or used as the argument of a rate function.
struct VolVector {
  double q1 = 0.0;
  double q2 = 0.0;
  double c = 0.0;

  friend bool operator==(const VolVector&, const VolVector&) = default;
};

/// Piecewise-constant function on [0, 1].
///
/// Piece i covers [breakpoints[i], breakpoints[i+1]); the last piece is closed
/// on the right so that t = 1 maps to it.
class CoefficientFunction {
 public:
  /// Throws std::invalid_argument unless breakpoints start at 0, end at 1, are
  /// strictly increasing, and there is exactly one finite value per piece.
  CoefficientFunction(std::vector<double> breakpoints, std::vector<double> values);

  static CoefficientFunction constant(double value);

  double operator()(double t) const;
  std::size_t piece_index(double t) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> values() const { return values_; }
  std::size_t pieces() const { return values_.size(); }
  bool is_constant() const;

  double min_value() const;
  double max_value() const;
  double max_abs() const;

  /// Exact integral over [a, b] with 0 <= a <= b <= 1.
  double integrate(double a, double b) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

double eval(const CoefficientFunction& f, double t);

struct GaussianJumps {
  double mean = 0.0;
  double stddev = 1.0;
};

/// +magnitude with probability up_probability, -magnitude otherwise.
struct FixedSignedJumps {
  double magnitude = 1.0;
  double up_probability = 0.5;
};

struct LaplaceJumps {
  double scale = 1.0;
};

using JumpSizeLaw = std::variant<GaussianJumps, FixedSignedJumps, LaplaceJumps>;

/// Compound Poisson component: `intensity` jumps per unit time, i.i.d. sizes.
struct JumpSpec {
  double intensity = 0.0;
  JumpSizeLaw size_law = GaussianJumps{};

  static JumpSpec none() { return {}; }
  void validate() const;
};

enum class JumpCoupling {
  Independent,
  /// One Poisson clock drives both legs; sizes are drawn independently per leg.
  CommonClock,
};

/// Bivariate jump-diffusion
///   dX1 = b1(t) dt + sigma1(t) dW1 + dJ1
///   dX2 = b2(t) dt + sigma2(t) dW2 + dJ2,  d<W1, W2>_t = rho(t) dt
/// with piecewise-constant deterministic coefficients.
///
/// Volatilities must be nonnegative (zero is allowed for degenerate test
/// models); |rho| < 1 strictly. Under CommonClock both legs must carry the
/// same intensity.
class ModelSpec {
 public:
  ModelSpec(CoefficientFunction sigma1, CoefficientFunction sigma2, CoefficientFunction rho,
            CoefficientFunction drift1, CoefficientFunction drift2, JumpSpec jumps1,
            JumpSpec jumps2, JumpCoupling coupling = JumpCoupling::Independent);

  /// Constant coefficients, no drift, no jumps.
  static ModelSpec constant(double sigma1, double sigma2, double rho);

  const CoefficientFunction& sigma1() const { return sigma1_; }
  const CoefficientFunction& sigma2() const { return sigma2_; }
  const CoefficientFunction& rho() const { return rho_; }
  const CoefficientFunction& drift1() const { return drift1_; }
  const CoefficientFunction& drift2() const { return drift2_; }
  const JumpSpec& jumps1() const { return jumps1_; }
  const JumpSpec& jumps2() const { return jumps2_; }
  JumpCoupling coupling() const { return coupling_; }

  bool has_jumps() const { return jumps1_.intensity > 0.0 || jumps2_.intensity > 0.0; }
  bool has_drift() const;
  bool constant_diffusion() const;

  /// Copies with one component replaced.
  ModelSpec with_jumps(JumpSpec jumps1, JumpSpec jumps2, JumpCoupling coupling) const;
  ModelSpec with_drift(CoefficientFunction drift1, CoefficientFunction drift2) const;

 private:
  CoefficientFunction sigma1_;
  CoefficientFunction sigma2_;
  CoefficientFunction rho_;
  CoefficientFunction drift1_;
  CoefficientFunction drift2_;
  JumpSpec jumps1_;
  JumpSpec jumps2_;
  JumpCoupling coupling_;
};

enum class ProductKind { Var1, Var2, Cov };

/// Sorted union of the breakpoints of the given functions.
std::vector<double> merge_breakpoints(std::span<const CoefficientFunction* const> fs);

/// Exact integral of sigma1^2, sigma2^2 or sigma1*sigma2*rho over [a, b].
double integrate_product(const ModelSpec& model, ProductKind kind, double a, double b);

/// [V]_t = (int_0^t sigma1^2, int_0^t sigma2^2, int_0^t sigma1 sigma2 rho).
VolVector true_vol_vector(const ModelSpec& model, double t);

}  // namespace tvol
