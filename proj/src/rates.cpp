#include "tvol/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tvol {
namespace {

void check_correlation(double c) {
  if (!(std::abs(c) < 1.0)) throw std::invalid_argument("correlation must satisfy |c| < 1");
}

// p_c and its derivatives in the scaled argument mu.
struct PcTerms {
  bool finite = false;
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

PcTerms pc_terms(double c, const Eigen::Vector3d& mu, bool derivatives) {
  PcTerms out;
  const double a = 1.0 - c * c;
  const double A = 1.0 - 2.0 * mu[0] * a;
  const double B = 1.0 - 2.0 * mu[1] * a;
  const double C = mu[2] * a + c;
  const double num = A * B - C * C;
  if (!(A > 0.0 && B > 0.0 && num > 0.0)) return out;
  out.finite = true;
  out.value = -0.5 * std::log(num / a);
  if (!derivatives) return out;
  out.grad = Eigen::Vector3d(a * B, a * A, a * C) / num;
  const double a2 = a * a;
  const double n2 = num * num;
  Eigen::Matrix3d& h = out.hess;
  h(0, 0) = 2.0 * a2 * B * B / n2;
  h(1, 1) = 2.0 * a2 * A * A / n2;
  h(0, 1) = h(1, 0) = -2.0 * a2 / num + 2.0 * a2 * A * B / n2;
  h(0, 2) = h(2, 0) = 2.0 * a2 * B * C / n2;
  h(1, 2) = h(2, 1) = 2.0 * a2 * A * C / n2;
  h(2, 2) = a2 / num + 2.0 * a2 * C * C / n2;
  return out;
}

Eigen::Vector3d piece_scaling(const CoefficientPiece& p) {
  return {p.sigma1 * p.sigma1, p.sigma2 * p.sigma2, p.sigma1 * p.sigma2};
}

// p_star for a piece whose volatilities may vanish: a zero volatility pins the
// matching slope components to zero, and the remaining leg follows the scalar
// chi-square rate 1/2 (y - 1 - log y).
ExtReal piece_pstar(const CoefficientPiece& p, const Eigen::Vector3d& slope) {
  const double s1 = p.sigma1, s2 = p.sigma2;
  if (s1 > 0.0 && s2 > 0.0) {
    return p_star(p.rho, {slope[0] / (s1 * s1), slope[1] / (s2 * s2), slope[2] / (s1 * s2)});
  }
  if (slope[2] != 0.0) return ExtReal::infinity();
  auto scalar = [](double y) -> ExtReal {
    if (!(y > 0.0)) return ExtReal::infinity();
    return 0.5 * (y - 1.0 - std::log(y));
  };
  if (s1 == 0.0 && s2 == 0.0) {
    return (slope[0] == 0.0 && slope[1] == 0.0) ? ExtReal(0.0) : ExtReal::infinity();
  }
  if (s1 == 0.0) {
    if (slope[0] != 0.0) return ExtReal::infinity();
    return scalar(slope[1] / (s2 * s2));
  }
  if (slope[1] != 0.0) return ExtReal::infinity();
  return scalar(slope[0] / (s1 * s1));
}

}  // namespace

bool in_domain(double c, const LambdaVec& lam) {
  check_correlation(c);
  const double a = 1.0 - c * c;
  const double bound = 1.0 / (2.0 * a);
  if (!(std::max(lam.l1, lam.l2) < bound)) return false;
  const double lhs = (1.0 - 2.0 * lam.l1 * a) * (1.0 - 2.0 * lam.l2 * a);
  const double rhs = (lam.l3 * a + c) * (lam.l3 * a + c);
  return lhs > rhs;
}

ExtReal p_c(double c, const LambdaVec& lam) {
  check_correlation(c);
  const auto t = pc_terms(c, to_eigen(lam), false);
  return t.finite ? ExtReal(t.value) : ExtReal::infinity();
}

ExtReal p_star(double c, const VolVector& x) {
  check_correlation(c);
  const double det = x.q1 * x.q2 - x.c * x.c;
  if (!(x.q1 > 0.0 && x.q2 > 0.0 && det > 0.0)) return ExtReal::infinity();
  const double a = 1.0 - c * c;
  return 0.5 * std::log(a / det) - 1.0 + (x.q1 + x.q2 - 2.0 * c * x.c) / (2.0 * a);
}

RateContext::RateContext(const ModelSpec& model) {
  const CoefficientFunction* fs[] = {&model.sigma1(), &model.sigma2(), &model.rho()};
  const auto grid = merge_breakpoints(fs);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    pieces_.push_back({grid[i], grid[i + 1], model.sigma1()(grid[i]), model.sigma2()(grid[i]),
                       model.rho()(grid[i])});
  }
  sigma1_.setZero();
  mean_.setZero();
  for (const auto& p : pieces_) {
    const double s1 = p.sigma1, s2 = p.sigma2, r = p.rho, w = p.length();
    sigma1_(0, 0) += w * std::pow(s1, 4);
    sigma1_(1, 1) += w * std::pow(s2, 4);
    sigma1_(0, 1) += w * s1 * s1 * s2 * s2 * r * r;
    sigma1_(0, 2) += w * std::pow(s1, 3) * s2 * r;
    sigma1_(1, 2) += w * s1 * std::pow(s2, 3) * r;
    sigma1_(2, 2) += w * 0.5 * s1 * s1 * s2 * s2 * (1.0 + r * r);
    mean_ += w * Eigen::Vector3d(s1 * s1, s2 * s2, s1 * s2 * r);
  }
  sigma1_(1, 0) = sigma1_(0, 1);
  sigma1_(2, 0) = sigma1_(0, 2);
  sigma1_(2, 1) = sigma1_(1, 2);
}

const CoefficientPiece& RateContext::piece_at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("piece_at: t outside [0, 1]");
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double v, const CoefficientPiece& p) { return v < p.end; });
  if (it == pieces_.end()) return pieces_.back();
  return *it;
}

ExtReal lambda_fn(const RateContext& ctx, const LambdaVec& lam) {
  const Eigen::Vector3d l = to_eigen(lam);
  double sum = 0.0;
  for (const auto& p : ctx.pieces()) {
    const auto t = pc_terms(p.rho, piece_scaling(p).cwiseProduct(l), false);
    if (!t.finite) return ExtReal::infinity();
    sum += p.length() * t.value;
  }
  return sum;
}

LambdaDerivatives lambda_derivatives(const RateContext& ctx, const LambdaVec& lam) {
  const Eigen::Vector3d l = to_eigen(lam);
  LambdaDerivatives out;
  for (const auto& p : ctx.pieces()) {
    const Eigen::Vector3d d = piece_scaling(p);
    const auto t = pc_terms(p.rho, d.cwiseProduct(l), true);
    if (!t.finite) return {};
    out.value += p.length() * t.value;
    out.gradient += p.length() * d.cwiseProduct(t.grad);
    out.hessian += p.length() * (d.asDiagonal() * t.hess * d.asDiagonal());
  }
  out.finite = true;
  return out;
}

LegendreResult i_ldp_solve(const RateContext& ctx, const VolVector& x, const LegendreOptions& opts) {
  LegendreResult res;
  if (!(x.q1 > 0.0 && x.q2 > 0.0 && x.q1 * x.q2 > x.c * x.c)) {
    res.value = ExtReal::infinity();
    res.status = "outside_support";
    return res;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(ctx.sigma1());
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument("i_ldp: degenerate model (Lambda has a singular Hessian at 0)");
  }

  const Eigen::Vector3d xv = to_eigen(x);
  Eigen::Vector3d lam = Eigen::Vector3d::Zero();
  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto d = lambda_derivatives(ctx, to_lambda(lam));
    const double f = lam.dot(xv) - d.value;
    const Eigen::Vector3d g = xv - d.gradient;
    res.iterations = it;
    res.gradient_norm = g.norm();
    res.maximizer = to_lambda(lam);
    if (res.gradient_norm < opts.gradient_tolerance) {
      res.value = std::max(f, 0.0);
      res.status = "converged";
      return res;
    }
    if (f > opts.divergence_cap) {
      res.value = ExtReal::infinity();
      res.status = "diverged";
      return res;
    }
    Eigen::LLT<Eigen::Matrix3d> llt(d.hessian);
    Eigen::Vector3d step = llt.info() == Eigen::Success ? Eigen::Vector3d(llt.solve(g)) : g;
    const double slope = g.dot(step);
    bool accepted = false;
    double t = 1.0;
    for (int k = 0; k < 80; ++k, t *= 0.5) {
      const Eigen::Vector3d trial = lam + t * step;
      const ExtReal v = lambda_fn(ctx, to_lambda(trial));
      if (v.is_infinite()) continue;
      const double ft = trial.dot(xv) - v.value();
      if (ft >= f + 1e-4 * t * slope) {
        lam = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No representable ascent left; accept if already at rounding level.
      if (res.gradient_norm < 1e-6) {
        res.value = std::max(f, 0.0);
        res.status = "converged";
        return res;
      }
      throw ConvergenceError("i_ldp: line search failed with gradient norm " +
                             std::to_string(res.gradient_norm));
    }
  }
  throw ConvergenceError("i_ldp: no convergence within " + std::to_string(opts.max_iterations) +
                         " iterations");
}

ExtReal i_ldp(const RateContext& ctx, const VolVector& x) { return i_ldp_solve(ctx, x).value; }

ExtReal i_ldp_constant(double sigma1, double sigma2, double rho, const VolVector& x) {
  if (!(sigma1 > 0.0 && sigma2 > 0.0)) throw std::invalid_argument("i_ldp_constant: sigmas must be > 0");
  check_correlation(rho);
  return p_star(rho, {x.q1 / (sigma1 * sigma1), x.q2 / (sigma2 * sigma2), x.c / (sigma1 * sigma2)});
}

Eigen::Matrix3d sigma1_matrix(const RateContext& ctx) { return ctx.sigma1(); }

double i_mdp(const RateContext& ctx, const VolVector& x) {
  const Eigen::Matrix3d& s = ctx.sigma1();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw SingularMatrixError("i_mdp: Sigma_1 is singular or ill-conditioned (eigenvalues " +
                              std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
  const Eigen::Vector3d xv = to_eigen(x);
  const Eigen::Vector3d y = s.ldlt().solve(xv);
  return 0.5 * xv.dot(y);
}

SigmaBar sigma_bar(double s1, double s2, double r) {
  if (!(s1 > 0.0 && s2 > 0.0) || !(std::abs(r) < 1.0)) {
    throw SingularMatrixError("sigma_bar: needs sigma1, sigma2 > 0 and |rho| < 1");
  }
  const double s1_2 = s1 * s1, s2_2 = s2 * s2;
  const double s1_3 = s1_2 * s1, s2_3 = s2_2 * s2;
  const double s1_4 = s1_2 * s1_2, s2_4 = s2_2 * s2_2;
  const double s1_5 = s1_4 * s1, s2_5 = s2_4 * s2;
  const double s1_6 = s1_4 * s1_2, s2_6 = s2_4 * s2_2;
  const double r2 = r * r;
  const double q = 1.0 - r2;

  SigmaBar out;
  out.matrix << s1_4, s1_2 * s2_2 * r2, s1_3 * s2 * r,  //
      s1_2 * s2_2 * r2, s2_4, s1 * s2_3 * r,             //
      s1_3 * s2 * r, s1 * s2_3 * r, 0.5 * s1_2 * s2_2 * (1.0 + r2);
  out.det = 0.5 * s1_6 * s2_6 * q * q * q;
  Eigen::Matrix3d adj;
  adj << 0.5 * s1_2 * s2_6 * q, 0.5 * s1_4 * s2_4 * r2 * q, -s1_3 * s2_5 * r * q,  //
      0.5 * s1_4 * s2_4 * r2 * q, 0.5 * s1_6 * s2_2 * q, -s1_5 * s2_3 * r * q,     //
      -s1_3 * s2_5 * r * q, -s1_5 * s2_3 * r * q, s1_4 * s2_4 * (1.0 - r2 * r2);
  out.inverse = adj / out.det;
  return out;
}

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> knots, std::vector<VolVector> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.front() != 0.0 || knots_.back() != 1.0) {
    throw std::invalid_argument("path knots must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("path knots must be strictly increasing");
  }
  if (values_.size() != knots_.size()) throw std::invalid_argument("path needs one value per knot");
  if (!(values_.front() == VolVector{})) throw std::invalid_argument("path must start at 0");
}

PiecewiseLinearPath PiecewiseLinearPath::linear(const VolVector& slope) {
  return PiecewiseLinearPath({0.0, 1.0}, {VolVector{}, slope});
}

namespace {

std::size_t segment_index(const std::vector<double>& knots, double t) {
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  auto idx = static_cast<std::size_t>(it - knots.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, knots.size() - 2);
}

// Merged breakpoints of a path and a context.
std::vector<double> merged_grid(const RateContext& ctx, const PiecewiseLinearPath& path) {
  std::vector<double> grid = path.knots();
  for (const auto& p : ctx.pieces()) grid.push_back(p.start);
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

VolVector PiecewiseLinearPath::operator()(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("path evaluated outside [0, 1]");
  const std::size_t i = segment_index(knots_, t);
  const double w = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  const Eigen::Vector3d v = (1.0 - w) * to_eigen(values_[i]) + w * to_eigen(values_[i + 1]);
  return to_vol(v);
}

Eigen::Vector3d PiecewiseLinearPath::slope_at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("path evaluated outside [0, 1]");
  const std::size_t i = segment_index(knots_, t);
  return (to_eigen(values_[i + 1]) - to_eigen(values_[i])) / (knots_[i + 1] - knots_[i]);
}

double j_mdp(const RateContext& ctx, const PiecewiseLinearPath& phi) {
  const auto grid = merged_grid(ctx, phi);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto& p = ctx.piece_at(grid[i]);
    const Eigen::Vector3d s = phi.slope_at(grid[i]);
    const SigmaBar sb = sigma_bar(p.sigma1, p.sigma2, p.rho);
    sum += (grid[i + 1] - grid[i]) * 0.5 * s.dot(sb.inverse * s);
  }
  return sum;
}

ExtReal j_ldp_ac(const RateContext& ctx, const PiecewiseLinearPath& f) {
  const auto grid = merged_grid(ctx, f);
  ExtReal sum = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto& p = ctx.piece_at(grid[i]);
    sum += scale(piece_pstar(p, f.slope_at(grid[i])), grid[i + 1] - grid[i]);
    if (sum.is_infinite()) break;
  }
  return sum;
}

ContractResult contract(const RateContext& ctx, const Eigen::Vector3d& u, double level) {
  if (!(u.norm() > 0.0)) throw std::invalid_argument("contract: direction must be nonzero");
  ContractResult res;
  const double mean_proj = u.dot(ctx.mean());
  if (level <= mean_proj) {
    res.value = 0.0;
    return res;
  }

  // g(t) = t * level - Lambda(t u) is concave with g'(0) = level - <u, mean> > 0.
  struct Eval {
    bool finite;
    double g, dg, d2g;
  };
  auto eval = [&](double t) -> Eval {
    const auto d = lambda_derivatives(ctx, to_lambda(t * u));
    if (!d.finite) return {false, 0.0, 0.0, 0.0};
    return {true, t * level - d.value, level - u.dot(d.gradient), -u.dot(d.hessian * u)};
  };

  constexpr double kMaxMultiplier = 1e12;
  constexpr double kCap = 1e6;
  double lo = 0.0, hi = 1.0;
  for (;;) {
    ++res.iterations;
    const Eval e = eval(hi);
    if (!e.finite || e.dg < 0.0) break;
    if (e.g > kCap || hi > kMaxMultiplier) {
      res.value = ExtReal::infinity();
      res.multiplier = hi;
      return res;
    }
    lo = hi;
    hi *= 2.0;
  }

  // Safeguarded Newton on g' within [lo, hi], g'(lo) >= 0 > g'(hi).
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    ++res.iterations;
    const Eval e = eval(t);
    if (!e.finite) {
      hi = t;
    } else {
      if (std::abs(e.dg) <= 1e-13 * std::max(1.0, std::abs(level))) {
        res.value = std::max(e.g, 0.0);
        res.multiplier = t;
        return res;
      }
      (e.dg > 0.0 ? lo : hi) = t;
      const double newton = e.d2g < 0.0 ? t - e.dg / e.d2g : std::numeric_limits<double>::quiet_NaN();
      if (newton > lo && newton < hi) {
        t = newton;
        continue;
      }
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      const Eval fin = eval(lo);
      res.value = std::max(fin.g, 0.0);
      res.multiplier = lo;
      return res;
    }
    t = mid;
  }
  throw ConvergenceError("contract: no convergence in the dual line search");
}

double contract_quadratic(const Eigen::Matrix3d& cov, const Eigen::Vector3d& u, double level) {
  if (!(u.norm() > 0.0)) throw std::invalid_argument("contract: direction must be nonzero");
  if (level <= 0.0) return 0.0;
  const double v = u.dot(cov * u);
  if (!(v > 0.0)) throw SingularMatrixError("contract: direction has zero variance");
  return level * level / (2.0 * v);
}

double contract_mdp(const RateContext& ctx, const Eigen::Vector3d& u, double level) {
  return contract_quadratic(ctx.sigma1(), u, level);
}

}  // namespace tvol
