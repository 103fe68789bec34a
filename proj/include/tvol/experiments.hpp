#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tvol/estimate.hpp"
#include "tvol/model.hpp"
#include "tvol/regimes.hpp"
#include "tvol/rng.hpp"
#include "tvol/simulate.hpp"

namespace tvol {

/// What every Monte Carlo driver needs: the model, the estimator (threshold or
/// untruncated), the moderate-deviation scale exponent and the worker count.
struct ExperimentSetup {
  ModelSpec model;
  /// nullopt means the untruncated realized estimator.
  std::optional<ThresholdFn> threshold;
  std::optional<double> gamma;
  unsigned workers = 1;

  /// r(1/n), or +inf when untruncated.
  double r_for(std::size_t n) const;
  /// The estimator V_1^n selected by this setup.
  VolVector estimator(const SampledPath& path) const;
};

/// Simulates `reps` paths on the n-grid and returns fn(index, result) for
/// each, in index order. Path i uses derive_subseed(seed, i), so the output
/// does not depend on setup.workers.
template <class Fn>
auto map_paths(const ExperimentSetup& setup, std::size_t n, std::size_t reps, std::uint64_t seed, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<const SimulationResult&>()))>;

/// V_1^n for each of `reps` paths.
std::vector<VolVector> sample_estimates(const ExperimentSetup& setup, std::size_t n, std::size_t reps,
                                        std::uint64_t seed);

// --- consistency -----------------------------------------------------------

struct ConsistencyRow {
  std::size_t n = 0;
  std::size_t reps = 0;
  double r = 0.0;
  Eigen::Vector3d threshold_mae = Eigen::Vector3d::Zero();
  Eigen::Vector3d plain_mae = Eigen::Vector3d::Zero();
};

/// Mean absolute error against [V]_1 of the threshold and untruncated
/// estimators for each n. Needs setup.threshold.
std::vector<ConsistencyRow> run_consistency(const ExperimentSetup& setup,
                                            const std::vector<std::size_t>& n_list, std::size_t reps,
                                            std::uint64_t seed);

// --- central limit covariance ---------------------------------------------

struct CltReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  Eigen::Vector3d sample_mean = Eigen::Vector3d::Zero();
  /// Sample covariance of sqrt(n) (V_1^n - [V]_1).
  Eigen::Matrix3d sample_cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d sigma1 = Eigen::Matrix3d::Zero();
  /// Hessian of Lambda at 0 (= 2 Sigma_1).
  Eigen::Matrix3d lambda_hessian = Eigen::Matrix3d::Zero();
  /// max_i |cov_ii / target_ii - 1| and max_{i != j} |cov_ij| for each target.
  double max_rel_diag_err_sigma1 = 0.0;
  double max_rel_diag_err_hessian = 0.0;
  double max_abs_offdiag = 0.0;
};

/// Requires reps >= 1000.
CltReport run_clt(const ExperimentSetup& setup, std::size_t n, std::size_t reps, std::uint64_t seed);

// --- tail probabilities ----------------------------------------------------

enum class Statistic {
  /// V_1^n itself (large deviations, speed n).
  LdpLevel,
  /// sqrt(n) / v_n (V_1^n - [V]_1), v_n = n^gamma (moderate deviations, speed v_n^2).
  MdpScaled,
};

/// Event { <direction, statistic> >= level }.
struct EventSpec {
  Statistic statistic = Statistic::LdpLevel;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
  double level = 0.0;
  std::optional<double> gamma;

  void validate() const;
  double speed(std::size_t n) const;
  bool occurs(const VolVector& estimate, const VolVector& target, std::size_t n) const;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

/// 95% Wilson score interval for `hits` successes out of `trials`.
WilsonInterval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

struct TailEstimate {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double speed = 1.0;
  /// -log(p_hat) / speed; when p_hat = 0 this is -log(ci_high) / speed and only
  /// bounds the true value from below (lower_bound_only = true).
  double neg_log_over_speed = 0.0;
  bool lower_bound_only = false;
};

/// Builds the estimate from a hit count (shared by the Monte Carlo drivers).
TailEstimate make_tail_estimate(std::size_t n, std::size_t reps, std::size_t hits, double speed);

/// Plain Monte Carlo frequency of the event. Requires reps >= 1000.
TailEstimate estimate_tail(const ExperimentSetup& setup, const EventSpec& event, std::size_t n,
                           std::size_t reps, std::uint64_t seed);

/// P(Q_1^n >= a) for constant volatility sigma, no drift, jumps or truncation:
/// n Q_1^n / sigma^2 is chi-square with n degrees of freedom, so this is the
/// regularized upper incomplete gamma Q(n/2, n a / (2 sigma^2)).
double chi2_tail_exact(std::size_t n, double a, double sigma_sq);

// --- deviation slopes ------------------------------------------------------

struct SlopeRow {
  std::size_t n = 0;
  std::size_t reps = 0;  // 0 for exact rows
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double speed = 1.0;
  double slope = 0.0;  // -log(p) / speed
  double reference = 0.0;
  double gap = 0.0;  // slope - reference
  bool exact = false;
  bool lower_bound_only = false;
  /// Moderate deviations only: slope from the exact chi-square oracle when it
  /// applies (NaN otherwise), and the quadratic contraction built from Sigma_1
  /// itself instead of the limiting covariance 2 Sigma_1.
  double oracle_slope = 0.0;
  double reference_sigma1 = 0.0;
};

struct SlopeReport {
  std::vector<SlopeRow> rows;
  double reference = 0.0;
  /// |gap| strictly decreasing along the grid.
  bool gap_shrinking = false;
  /// "exact" when every row came from the chi-square oracle, "monte_carlo" otherwise.
  std::string source;
};

/// True when P(<u, V_1^n> >= a) reduces to the chi-square oracle: untruncated
/// estimator, constant sigma1 > 0, no drift or jumps on leg 1, u = (u1, 0, 0)
/// with u1 > 0.
bool exact_oracle_applies(const ExperimentSetup& setup, const EventSpec& event);

/// Large-deviation slopes -log P / n along n_grid against the contraction of
/// I_ldp over the event. Rows use chi2_tail_exact when exact_oracle_applies,
/// Monte Carlo otherwise.
SlopeReport ldp_slope(const ExperimentSetup& setup, const EventSpec& event,
                      const std::vector<std::size_t>& n_grid, std::size_t reps, std::uint64_t seed);

/// Moderate-deviation slopes -log p_hat / v_n^2 (Monte Carlo) against the
/// quadratic contraction a^2 / (2 u' H u), H = Hess Lambda(0) = 2 Sigma_1 the
/// covariance of the Gaussian limit. The setup's threshold regime must pass
/// check_mdp; an untruncated setup is accepted only for jump-free models.
SlopeReport mdp_slope(const ExperimentSetup& setup, const EventSpec& event,
                      const std::vector<std::size_t>& n_grid, std::size_t reps, std::uint64_t seed);

// --- jump filtering --------------------------------------------------------

struct FilterReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  double r = 0.0;
  bool has_jump_cells = false;
  /// Per leg: cells with at least one jump, and those with (dX)^2 > r.
  std::size_t jump_cells[2] = {0, 0};
  std::size_t flagged_cells[2] = {0, 0};
  double flagged_fraction[2] = {0.0, 0.0};
  /// Mean per path of the summed squared jump part over jump cells kept by the threshold.
  double residual_jump_mass[2] = {0.0, 0.0};
  /// Mean of threshold V_1^n - [V]_1.
  Eigen::Vector3d mean_bias = Eigen::Vector3d::Zero();
};

/// Needs setup.threshold.
FilterReport jump_filter_report(const ExperimentSetup& setup, std::size_t n, std::size_t reps,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------

template <class Fn>
auto map_paths(const ExperimentSetup& setup, std::size_t n, std::size_t reps, std::uint64_t seed, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<const SimulationResult&>()))> {
  using R = decltype(fn(std::size_t{}, std::declval<const SimulationResult&>()));
  std::vector<R> out(reps);
  const GridMoments grid(setup.model, n);
  const unsigned workers = std::max(1u, std::min<unsigned>(setup.workers, static_cast<unsigned>(std::max<std::size_t>(reps, 1))));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](unsigned w) {
    try {
      SimulationResult sim;
      for (std::size_t i = w; i < reps; i += workers) {
        simulate_path(grid, derive_subseed(seed, i), sim);
        out[i] = fn(i, static_cast<const SimulationResult&>(sim));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace tvol
