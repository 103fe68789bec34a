#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvol/extended_real.hpp"
#include "tvol/model.hpp"

namespace tvol {

/// Conjugate variable (lambda1, lambda2, lambda3) paired with a VolVector.
struct LambdaVec {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

inline Eigen::Vector3d to_eigen(const VolVector& v) { return {v.q1, v.q2, v.c}; }
inline Eigen::Vector3d to_eigen(const LambdaVec& v) { return {v.l1, v.l2, v.l3}; }
inline VolVector to_vol(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
inline LambdaVec to_lambda(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

/// An iterative rate computation hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be inverted is singular or too ill-conditioned.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed forms for a single correlation level c, |c| < 1.
// ---------------------------------------------------------------------------

/// Effective domain D_c of the cumulant function p_c:
///   max(l1, l2) < 1 / (2 (1 - c^2))  and
///   (1 - 2 l1 (1 - c^2)) (1 - 2 l2 (1 - c^2)) > (l3 (1 - c^2) + c)^2.
bool in_domain(double c, const LambdaVec& lam);

/// Limiting scaled log-MGF of one Gaussian cell with unit variances and
/// correlation c:
///   p_c(l) = -1/2 log( [(1 - 2 l1 a)(1 - 2 l2 a) - (l3 a + c)^2] / a ),  a = 1 - c^2,
/// on D_c and +inf elsewhere.
ExtReal p_c(double c, const LambdaVec& lam);

/// Convex conjugate of p_c:
///   log( sqrt(1 - c^2) / sqrt(x1 x2 - x3^2) ) - 1 + (x1 + x2 - 2 c x3) / (2 (1 - c^2))
/// when x1 > 0, x2 > 0, x1 x2 > x3^2; +inf otherwise.
ExtReal p_star(double c, const VolVector& x);

// ---------------------------------------------------------------------------
// Model-level rate functions.
// ---------------------------------------------------------------------------

/// One piece of the merged (sigma1, sigma2, rho) grid.
struct CoefficientPiece {
  double start = 0.0;
  double end = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;

  double length() const { return end - start; }
};

/// Precomputed per-piece coefficients of a model and its Sigma_1 matrix.
/// Immutable after construction.
class RateContext {
 public:
  explicit RateContext(const ModelSpec& model);

  const std::vector<CoefficientPiece>& pieces() const { return pieces_; }
  const Eigen::Matrix3d& sigma1() const { return sigma1_; }
  /// (int sigma1^2, int sigma2^2, int sigma1 sigma2 rho) over [0, 1].
  const Eigen::Vector3d& mean() const { return mean_; }

  /// Piece containing t (right-continuous, t = 1 in the last piece).
  const CoefficientPiece& piece_at(double t) const;

 private:
  std::vector<CoefficientPiece> pieces_;
  Eigen::Matrix3d sigma1_;
  Eigen::Vector3d mean_;
};

/// Lambda(l) = int_0^1 p_rho(t)(l1 sigma1^2, l2 sigma2^2, l3 sigma1 sigma2) dt,
/// summed exactly over the coefficient pieces.
ExtReal lambda_fn(const RateContext& ctx, const LambdaVec& lam);

/// Value, gradient and Hessian of Lambda at an interior point.
/// `finite` is false (and the derivatives unset) when lam is outside the domain.
struct LambdaDerivatives {
  bool finite = false;
  double value = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};
LambdaDerivatives lambda_derivatives(const RateContext& ctx, const LambdaVec& lam);

struct LegendreOptions {
  double gradient_tolerance = 1e-8;
  /// Objective values beyond this are reported as +inf.
  double divergence_cap = 1e6;
  int max_iterations = 500;
};

struct LegendreResult {
  ExtReal value;
  LambdaVec maximizer;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// "converged", "outside_support" or "diverged".
  std::string status;
};

/// I_ldp(x) = sup_l <l, x> - Lambda(l), by damped Newton ascent from l = 0.
///
/// Trial points outside the domain of Lambda are rejected by backtracking; the
/// log barrier of p_c at the domain boundary keeps iterates interior. Points x
/// outside the open cone {x1 > 0, x2 > 0, x1 x2 > x3^2} return +inf directly
/// (the supremum is unbounded there); an objective exceeding the divergence cap
/// also returns +inf. Throws ConvergenceError at the iteration cap.
LegendreResult i_ldp_solve(const RateContext& ctx, const VolVector& x, const LegendreOptions& opts = {});
ExtReal i_ldp(const RateContext& ctx, const VolVector& x);

/// Closed form for constant coefficients: p_star_rho(x1/s1^2, x2/s2^2, x3/(s1 s2)).
ExtReal i_ldp_constant(double sigma1, double sigma2, double rho, const VolVector& x);

/// Sigma_1 with entries int s1^4, int s1^2 s2^2 rho^2, int s1^3 s2 rho,
/// int s2^4, int s1 s2^3 rho, int 1/2 s1^2 s2^2 (1 + rho^2).
///
/// Note: the Hessian of Lambda at 0 (the covariance of the Gaussian limit of
/// sqrt(n)(V - [V])) equals 2 * Sigma_1.
Eigen::Matrix3d sigma1_matrix(const RateContext& ctx);

/// 1/2 <x, Sigma_1^{-1} x>, via an LDLT solve. Throws SingularMatrixError when
/// Sigma_1 is not positive definite or its condition number exceeds 1e12.
double i_mdp(const RateContext& ctx, const VolVector& x);

struct SigmaBar {
  Eigen::Matrix3d matrix;
  Eigen::Matrix3d inverse;
  double det = 0.0;
};

/// Pointwise covariance matrix for the functional moderate deviations with its
/// closed-form inverse and determinant 1/2 s1^6 s2^6 (1 - rho^2)^3.
/// Throws SingularMatrixError if a sigma is zero or |rho| >= 1.
SigmaBar sigma_bar(double sigma1, double sigma2, double rho);

/// Continuous piecewise-linear path [0, 1] -> R^3 with phi(0) = 0.
class PiecewiseLinearPath {
 public:
  /// knots strictly increasing from 0 to 1, one value per knot, values[0] = 0.
  PiecewiseLinearPath(std::vector<double> knots, std::vector<VolVector> values);

  /// phi(t) = t * slope.
  static PiecewiseLinearPath linear(const VolVector& slope);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<VolVector>& values() const { return values_; }

  VolVector operator()(double t) const;
  /// Derivative on the segment containing t (right-continuous).
  Eigen::Vector3d slope_at(double t) const;

 private:
  std::vector<double> knots_;
  std::vector<VolVector> values_;
};

/// int_0^1 1/2 <phi'(t), SigmaBar_t^{-1} phi'(t)> dt, exact over the merged
/// path/coefficient pieces.
double j_mdp(const RateContext& ctx, const PiecewiseLinearPath& phi);

/// Absolutely continuous part of the functional LDP rate:
/// int_0^1 p_star_rho(t)(f1'/s1^2, f2'/s2^2, f3'/(s1 s2)) dt.
ExtReal j_ldp_ac(const RateContext& ctx, const PiecewiseLinearPath& f);

struct ContractResult {
  ExtReal value;
  /// Optimal dual multiplier t >= 0 (the minimizer's conjugate point is t * u).
  double multiplier = 0.0;
  int iterations = 0;
};

/// inf { I_ldp(x) : <u, x> >= level }.
///
/// Evaluated through the one-dimensional dual sup_{t >= 0} t * level - Lambda(t u),
/// which equals the constrained infimum because Lambda is finite near 0. Returns
/// 0 when the mean already satisfies the constraint.
ContractResult contract(const RateContext& ctx, const Eigen::Vector3d& direction, double level);

/// inf { 1/2 <x, cov^{-1} x> : <u, x> >= level } = level^2 / (2 u' cov u) for level > 0.
double contract_quadratic(const Eigen::Matrix3d& cov, const Eigen::Vector3d& direction, double level);

/// contract_quadratic with cov = Sigma_1 (the I_mdp contraction).
double contract_mdp(const RateContext& ctx, const Eigen::Vector3d& direction, double level);

}  // namespace tvol
