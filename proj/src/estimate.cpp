#include "tvol/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvol {

ThresholdFn::ThresholdFn(double scale, double exponent) : scale_(scale), exponent_(exponent) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("threshold scale must be > 0");
  if (!(exponent > 0.0 && exponent < 1.0)) {
    throw std::invalid_argument("threshold exponent must lie in (0, 1)");
  }
}

double ThresholdFn::at_step(double h) const { return scale_ * std::pow(h, exponent_); }

double ThresholdFn::for_grid(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("threshold: n must be >= 1");
  return at_step(1.0 / static_cast<double>(n));
}

namespace {

void check_upto(const SampledPath& path, std::size_t upto) {
  if (upto > path.n) throw std::out_of_range("upto exceeds the number of cells");
}

void check_r(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("threshold r must be > 0");
}

}  // namespace

VolVector realized_vector(const SampledPath& path, std::size_t upto) {
  check_upto(path, upto);
  VolVector v;
  for (std::size_t k = 0; k < upto; ++k) {
    v.q1 += path.dx1[k] * path.dx1[k];
    v.q2 += path.dx2[k] * path.dx2[k];
    v.c += path.dx1[k] * path.dx2[k];
  }
  return v;
}

VolVector threshold_vector(const SampledPath& path, double r, std::size_t upto) {
  check_r(r);
  check_upto(path, upto);
  VolVector v;
  for (std::size_t k = 0; k < upto; ++k) {
    const double s1 = path.dx1[k] * path.dx1[k];
    const double s2 = path.dx2[k] * path.dx2[k];
    if (s1 <= r) v.q1 += s1;
    if (s2 <= r) v.q2 += s2;
    if (std::max(s1, s2) <= r) v.c += path.dx1[k] * path.dx2[k];
  }
  return v;
}

std::vector<VolVector> running_estimator(const SampledPath& path, double r) {
  check_r(r);
  std::vector<VolVector> out;
  out.reserve(path.n);
  VolVector acc;
  for (std::size_t k = 0; k < path.n; ++k) {
    const double s1 = path.dx1[k] * path.dx1[k];
    const double s2 = path.dx2[k] * path.dx2[k];
    if (s1 <= r) acc.q1 += s1;
    if (s2 <= r) acc.q2 += s2;
    if (std::max(s1, s2) <= r) acc.c += path.dx1[k] * path.dx2[k];
    out.push_back(acc);
  }
  return out;
}

VolVector full_quadratic_variation(const ModelSpec& model, const JumpTruth& truth) {
  const VolVector v = true_vol_vector(model, 1.0);
  return {v.q1 + truth.sum_sq1, v.q2 + truth.sum_sq2, v.c + truth.sum_cross};
}

}  // namespace tvol
