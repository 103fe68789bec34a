#include "tvol/experiments.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvol/rates.hpp"

namespace tvol {

double ExperimentSetup::r_for(std::size_t n) const {
  return threshold ? threshold->for_grid(n) : std::numeric_limits<double>::infinity();
}

VolVector ExperimentSetup::estimator(const SampledPath& path) const {
  return threshold ? threshold_vector(path, threshold->for_grid(path.n), path.n)
                   : realized_vector(path, path.n);
}

std::vector<VolVector> sample_estimates(const ExperimentSetup& setup, std::size_t n, std::size_t reps,
                                        std::uint64_t seed) {
  return map_paths(setup, n, reps, seed,
                   [&](std::size_t, const SimulationResult& sim) { return setup.estimator(sim.path); });
}

std::vector<ConsistencyRow> run_consistency(const ExperimentSetup& setup,
                                            const std::vector<std::size_t>& n_list, std::size_t reps,
                                            std::uint64_t seed) {
  if (n_list.empty()) throw std::invalid_argument("run_consistency: empty n list");
  if (!setup.threshold) throw std::invalid_argument("run_consistency needs a threshold");
  if (reps == 0) throw std::invalid_argument("run_consistency: reps must be >= 1");
  const Eigen::Vector3d target = to_eigen(true_vol_vector(setup.model, 1.0));
  std::vector<ConsistencyRow> rows;
  for (std::size_t n : n_list) {
    const double r = setup.r_for(n);
    struct Pair {
      VolVector thr, plain;
    };
    const auto per_path = map_paths(setup, n, reps, seed, [&](std::size_t, const SimulationResult& sim) {
      return Pair{threshold_vector(sim.path, r, n), realized_vector(sim.path, n)};
    });
    ConsistencyRow row{n, reps, r};
    for (const auto& p : per_path) {
      row.threshold_mae += (to_eigen(p.thr) - target).cwiseAbs();
      row.plain_mae += (to_eigen(p.plain) - target).cwiseAbs();
    }
    row.threshold_mae /= static_cast<double>(reps);
    row.plain_mae /= static_cast<double>(reps);
    rows.push_back(row);
  }
  return rows;
}

CltReport run_clt(const ExperimentSetup& setup, std::size_t n, std::size_t reps, std::uint64_t seed) {
  if (reps < 1000) throw std::invalid_argument("run_clt: reps must be >= 1000");
  if (n == 0) throw std::invalid_argument("run_clt: n must be >= 1");
  const RateContext ctx(setup.model);
  const Eigen::Vector3d target = ctx.mean();
  const auto est = sample_estimates(setup, n, reps, seed);
  const double root_n = std::sqrt(static_cast<double>(n));

  CltReport rep;
  rep.n = n;
  rep.reps = reps;
  for (const auto& v : est) rep.sample_mean += root_n * (to_eigen(v) - target);
  rep.sample_mean /= static_cast<double>(reps);
  for (const auto& v : est) {
    const Eigen::Vector3d d = root_n * (to_eigen(v) - target) - rep.sample_mean;
    rep.sample_cov += d * d.transpose();
  }
  rep.sample_cov /= static_cast<double>(reps - 1);
  rep.sigma1 = ctx.sigma1();
  rep.lambda_hessian = lambda_derivatives(ctx, {}).hessian;

  auto rel_diag = [&](const Eigen::Matrix3d& ref) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double e = ref(i, i) == 0.0 ? std::abs(rep.sample_cov(i, i))
                                         : std::abs(rep.sample_cov(i, i) / ref(i, i) - 1.0);
      worst = std::max(worst, e);
    }
    return worst;
  };
  rep.max_rel_diag_err_sigma1 = rel_diag(rep.sigma1);
  rep.max_rel_diag_err_hessian = rel_diag(rep.lambda_hessian);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) rep.max_abs_offdiag = std::max(rep.max_abs_offdiag, std::abs(rep.sample_cov(i, j)));
    }
  }
  return rep;
}

void EventSpec::validate() const {
  if (!(direction.norm() > 0.0)) throw std::invalid_argument("event direction must be nonzero");
  if (!std::isfinite(level)) throw std::invalid_argument("event level must be finite");
  if (statistic == Statistic::MdpScaled && !(gamma && *gamma > 0.0 && *gamma < 0.5)) {
    throw std::invalid_argument("moderate-deviation events need gamma in (0, 1/2)");
  }
}

double EventSpec::speed(std::size_t n) const {
  const double dn = static_cast<double>(n);
  return statistic == Statistic::LdpLevel ? dn : std::pow(dn, 2.0 * *gamma);
}

bool EventSpec::occurs(const VolVector& estimate, const VolVector& target, std::size_t n) const {
  const Eigen::Vector3d v = to_eigen(estimate);
  if (statistic == Statistic::LdpLevel) return direction.dot(v) >= level;
  const double dn = static_cast<double>(n);
  const double factor = std::sqrt(dn) / std::pow(dn, *gamma);
  return direction.dot(factor * (v - to_eigen(target))) >= level;
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  const double m = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / m;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / m;
  const double centre = (p + z2 / (2.0 * m)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / m + z2 / (4.0 * m * m)) / denom;
  return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == trials ? 1.0 : std::min(1.0, centre + half)};
}

TailEstimate make_tail_estimate(std::size_t n, std::size_t reps, std::size_t hits, double speed) {
  TailEstimate t;
  t.n = n;
  t.reps = reps;
  t.hits = hits;
  t.p_hat = static_cast<double>(hits) / static_cast<double>(reps);
  const auto ci = wilson_interval(hits, reps);
  t.ci_low = std::min(ci.low, t.p_hat);
  t.ci_high = std::max(ci.high, t.p_hat);
  t.speed = speed;
  if (hits == 0) {
    t.lower_bound_only = true;
    t.neg_log_over_speed = -std::log(t.ci_high) / speed;
  } else {
    t.neg_log_over_speed = -std::log(t.p_hat) / speed;
  }
  return t;
}

TailEstimate estimate_tail(const ExperimentSetup& setup, const EventSpec& event, std::size_t n,
                           std::size_t reps, std::uint64_t seed) {
  event.validate();
  if (reps < 1000) throw std::invalid_argument("estimate_tail: reps must be >= 1000");
  const VolVector target = true_vol_vector(setup.model, 1.0);
  const auto hits = map_paths(setup, n, reps, seed, [&](std::size_t, const SimulationResult& sim) {
    return static_cast<unsigned char>(event.occurs(setup.estimator(sim.path), target, n));
  });
  std::size_t count = 0;
  for (auto h : hits) count += h;
  return make_tail_estimate(n, reps, count, event.speed(n));
}

double chi2_tail_exact(std::size_t n, double a, double sigma_sq) {
  if (n == 0) throw std::invalid_argument("chi2_tail_exact: n must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("chi2_tail_exact: level must be > 0");
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("chi2_tail_exact: sigma^2 must be > 0");
  const double dn = static_cast<double>(n);
  return boost::math::gamma_q(dn / 2.0, dn * a / (2.0 * sigma_sq));
}

bool exact_oracle_applies(const ExperimentSetup& setup, const EventSpec& event) {
  const auto& m = setup.model;
  const auto& u = event.direction;
  return !setup.threshold && m.sigma1().is_constant() && m.sigma1().values()[0] > 0.0 &&
         m.jumps1().intensity == 0.0 && m.drift1().max_abs() == 0.0 && u[0] > 0.0 && u[1] == 0.0 &&
         u[2] == 0.0;
}

namespace {

// Exact P(event) in the chi-square regime.
double exact_probability(const ExperimentSetup& setup, const EventSpec& event, std::size_t n) {
  const double s2 = std::pow(setup.model.sigma1().values()[0], 2);
  double q_level = event.level / event.direction[0];
  if (event.statistic == Statistic::MdpScaled) {
    const double dn = static_cast<double>(n);
    q_level = s2 + q_level * std::pow(dn, *event.gamma) / std::sqrt(dn);
  }
  if (q_level <= 0.0) return 1.0;
  return chi2_tail_exact(n, q_level, s2);
}

void finish_report(SlopeReport& rep) {
  rep.gap_shrinking = rep.rows.size() >= 2;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (!(std::abs(rep.rows[i].gap) < std::abs(rep.rows[i - 1].gap))) rep.gap_shrinking = false;
  }
}

void check_grid(const std::vector<std::size_t>& n_grid) {
  if (n_grid.empty()) throw std::invalid_argument("slope: empty n grid");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > n_grid[i - 1])) throw std::invalid_argument("slope: n grid must be increasing");
  }
}

}  // namespace

SlopeReport ldp_slope(const ExperimentSetup& setup, const EventSpec& event,
                      const std::vector<std::size_t>& n_grid, std::size_t reps, std::uint64_t seed) {
  event.validate();
  if (event.statistic != Statistic::LdpLevel) throw std::invalid_argument("ldp_slope needs an LDP event");
  check_grid(n_grid);
  const RateContext ctx(setup.model);
  const ExtReal ref = contract(ctx, event.direction, event.level).value;
  SlopeReport rep;
  rep.reference = ref.to_double();
  const bool exact = exact_oracle_applies(setup, event);
  rep.source = exact ? "exact" : "monte_carlo";
  for (std::size_t n : n_grid) {
    SlopeRow row;
    row.n = n;
    row.reference = rep.reference;
    row.speed = static_cast<double>(n);
    row.oracle_slope = std::numeric_limits<double>::quiet_NaN();
    row.reference_sigma1 = std::numeric_limits<double>::quiet_NaN();
    if (exact) {
      const double p = exact_probability(setup, event, n);
      row.exact = true;
      row.p_hat = row.ci_low = row.ci_high = p;
      row.slope = -std::log(p) / row.speed;
    } else {
      const auto t = estimate_tail(setup, event, n, reps, seed);
      row.reps = reps;
      row.p_hat = t.p_hat;
      row.ci_low = t.ci_low;
      row.ci_high = t.ci_high;
      row.slope = t.neg_log_over_speed;
      row.lower_bound_only = t.lower_bound_only;
    }
    row.gap = row.slope - row.reference;
    rep.rows.push_back(row);
  }
  finish_report(rep);
  return rep;
}

SlopeReport mdp_slope(const ExperimentSetup& setup, const EventSpec& event,
                      const std::vector<std::size_t>& n_grid, std::size_t reps, std::uint64_t seed) {
  event.validate();
  if (event.statistic != Statistic::MdpScaled) throw std::invalid_argument("mdp_slope needs an MDP event");
  check_grid(n_grid);
  if (setup.threshold) {
    const PowerLawRegime regime(*setup.threshold, event.gamma);
    if (!check_mdp(regime, setup.model).all_pass()) {
      throw std::invalid_argument("mdp_slope: threshold regime fails the moderate-deviation conditions");
    }
  } else if (setup.model.has_jumps()) {
    throw std::invalid_argument("mdp_slope: jump models need a threshold regime");
  }
  const RateContext ctx(setup.model);
  SlopeReport rep;
  rep.reference = contract_quadratic(lambda_derivatives(ctx, {}).hessian, event.direction, event.level);
  const double ref_sigma1 = contract_mdp(ctx, event.direction, event.level);
  const bool exact = exact_oracle_applies(setup, event);
  rep.source = "monte_carlo";
  for (std::size_t n : n_grid) {
    const auto t = estimate_tail(setup, event, n, reps, seed);
    SlopeRow row;
    row.n = n;
    row.reps = reps;
    row.p_hat = t.p_hat;
    row.ci_low = t.ci_low;
    row.ci_high = t.ci_high;
    row.speed = t.speed;
    row.slope = t.neg_log_over_speed;
    row.lower_bound_only = t.lower_bound_only;
    row.reference = rep.reference;
    row.reference_sigma1 = ref_sigma1;
    row.gap = row.slope - row.reference;
    row.oracle_slope = exact ? -std::log(exact_probability(setup, event, n)) / t.speed
                             : std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back(row);
  }
  finish_report(rep);
  return rep;
}

FilterReport jump_filter_report(const ExperimentSetup& setup, std::size_t n, std::size_t reps,
                                std::uint64_t seed) {
  if (!setup.threshold) throw std::invalid_argument("jump_filter_report needs a threshold");
  if (reps == 0) throw std::invalid_argument("jump_filter_report: reps must be >= 1");
  const double r = setup.r_for(n);
  const Eigen::Vector3d target = to_eigen(true_vol_vector(setup.model, 1.0));
  struct PathStats {
    std::size_t cells[2] = {0, 0};
    std::size_t flagged[2] = {0, 0};
    double residual[2] = {0.0, 0.0};
    Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  };
  const auto per_path = map_paths(setup, n, reps, seed, [&](std::size_t, const SimulationResult& sim) {
    PathStats s;
    const auto& p = sim.path;
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t counts[2] = {p.jump_counts1[k], p.jump_counts2[k]};
      const double dx[2] = {p.dx1[k], p.dx2[k]};
      const double dj[2] = {p.dj1[k], p.dj2[k]};
      for (int l = 0; l < 2; ++l) {
        if (counts[l] == 0) continue;
        ++s.cells[l];
        if (dx[l] * dx[l] > r) {
          ++s.flagged[l];
        } else {
          s.residual[l] += dj[l] * dj[l];
        }
      }
    }
    s.bias = to_eigen(threshold_vector(p, r, n)) - target;
    return s;
  });

  FilterReport rep;
  rep.n = n;
  rep.reps = reps;
  rep.r = r;
  for (const auto& s : per_path) {
    for (int l = 0; l < 2; ++l) {
      rep.jump_cells[l] += s.cells[l];
      rep.flagged_cells[l] += s.flagged[l];
      rep.residual_jump_mass[l] += s.residual[l];
    }
    rep.mean_bias += s.bias;
  }
  const double m = static_cast<double>(reps);
  rep.mean_bias /= m;
  for (int l = 0; l < 2; ++l) {
    rep.residual_jump_mass[l] /= m;
    rep.flagged_fraction[l] = rep.jump_cells[l] == 0 ? 0.0
                                                     : static_cast<double>(rep.flagged_cells[l]) /
                                                           static_cast<double>(rep.jump_cells[l]);
  }
  rep.has_jump_cells = rep.jump_cells[0] + rep.jump_cells[1] > 0;
  return rep;
}

}  // namespace tvol
