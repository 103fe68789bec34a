#pragma once

#include <cstddef>
#include <vector>

#include "tvol/model.hpp"
#include "tvol/simulate.hpp"

namespace tvol {

/// Power-law threshold r(h) = scale * h^exponent, evaluated at h = 1/n.
class ThresholdFn {
 public:
  /// Requires scale > 0 and 0 < exponent < 1.
  ThresholdFn(double scale, double exponent);

  double scale() const { return scale_; }
  double exponent() const { return exponent_; }
  double at_step(double h) const;
  /// r(1/n).
  double for_grid(std::size_t n) const;

 private:
  double scale_;
  double exponent_;
};

/// Untruncated realized (co)variation over cells 1..upto.
VolVector realized_vector(const SampledPath& path, std::size_t upto);

/// Threshold estimator over cells 1..upto. Q_l keeps (dX_l)^2 when
/// (dX_l)^2 <= r; C keeps dX1*dX2 when max((dX1)^2, (dX2)^2) <= r.
/// r may be +inf (no truncation).
VolVector threshold_vector(const SampledPath& path, double r, std::size_t upto);

/// Threshold estimator at every upto = 1..n.
std::vector<VolVector> running_estimator(const SampledPath& path, double r);

/// Quadratic (co)variation over [0, 1] including jumps: the limit of the
/// untruncated estimator.
VolVector full_quadratic_variation(const ModelSpec& model, const JumpTruth& truth);

}  // namespace tvol
