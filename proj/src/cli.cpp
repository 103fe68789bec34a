#include "tvol/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "tvol/estimate.hpp"
#include "tvol/experiments.hpp"
#include "tvol/model_file.hpp"
#include "tvol/rates.hpp"
#include "tvol/regimes.hpp"
#include "tvol/results.hpp"
#include "tvol/simulate.hpp"

namespace tvol {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out;
  bool assert_mode = false;
};

// Raised for violated acceptance thresholds under --assert.
struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json ext_to_json(const ExtReal& v) { return v.is_finite() ? json(v.value()) : json("inf"); }

json vec_json(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

json mat_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int i = 0; i < 3; ++i) out.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return out;
}

// Echo of every option of a (sub)command: given values, or defaults.
json echo_options(const CLI::App& app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    } else {
      cfg[name] = nullptr;
    }
  }
  return cfg;
}

fs::path require_out(const GlobalOptions& g, const std::string& sub) {
  if (g.out.empty()) throw std::invalid_argument(sub + " needs --out DIR");
  return g.out;
}

std::vector<std::size_t> to_sizes(const std::vector<double>& xs, const char* what) {
  std::vector<std::size_t> out;
  for (double x : xs) {
    if (!(x >= 1.0) || x != std::floor(x)) throw std::invalid_argument(std::string(what) + " must be positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

Eigen::Vector3d to_vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw std::invalid_argument(std::string(what) + " needs exactly three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

PiecewiseLinearPath read_knots_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open path knots file '" + file.string() + "'");
  const ResultTable t = read_csv(in);
  if (t.columns != std::vector<std::string>{"s", "phi1", "phi2", "phi3"}) {
    throw std::invalid_argument("path knots file '" + file.string() + "' needs header s,phi1,phi2,phi3");
  }
  std::vector<double> knots;
  std::vector<VolVector> values;
  for (const auto& r : t.rows) {
    knots.push_back(r[0]);
    values.push_back({r[1], r[2], r[3]});
  }
  return PiecewiseLinearPath(std::move(knots), std::move(values));
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Threshold estimation of integrated (co)volatility with jump filtering: simulation, "
               "estimation, deviation rate functions and Monte Carlo checks.",
               "tvol"};
  app.set_config("--config", "", "INI/TOML file with option values (command-line flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed (echoed into every output)")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads for Monte Carlo runs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory for result files and manifest.json");
  app.add_flag("--assert", g.assert_mode, "Exit with code 2 when an acceptance threshold is violated");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one path and write its increments as CSV");
  std::string sim_model;
  std::size_t sim_n = 0;
  sim->add_option("--model", sim_model, "Model file")->required();
  sim->add_option("--n", sim_n, "Grid size")->required()->check(CLI::PositiveNumber);

  // estimate
  auto* est = app.add_subcommand("estimate", "Running threshold estimator on a path CSV");
  std::string est_path;
  double est_c = 1.0;
  std::optional<double> est_beta, est_r;
  est->add_option("--path", est_path, "Path CSV (as written by simulate)")->required();
  est->add_option("--threshold-c", est_c, "Threshold scale c in r = c n^-beta")->capture_default_str();
  auto* beta_opt = est->add_option("--threshold-beta", est_beta, "Threshold exponent beta in (0, 1)");
  est->add_option("--r-value", est_r, "Explicit threshold value r (instead of c, beta)")->excludes(beta_opt);

  // rate-eval
  auto* rate = app.add_subcommand("rate-eval", "Evaluate rate functions for a model");
  std::string rate_model, rate_knots;
  std::vector<double> rate_x, rate_lambda, rate_dir;
  std::optional<double> rate_level;
  rate->add_option("--model", rate_model, "Model file")->required();
  rate->add_option("--x", rate_x, "Point q1,q2,c for I_ldp and I_mdp")->delimiter(',');
  rate->add_option("--lambda", rate_lambda, "Point l1,l2,l3 for Lambda")->delimiter(',');
  rate->add_option("--path-knots", rate_knots, "CSV s,phi1,phi2,phi3 of a piecewise-linear path");
  rate->add_option("--direction", rate_dir, "Half-space direction u1,u2,u3")->delimiter(',');
  rate->add_option("--level", rate_level, "Half-space level a for {<u, x> >= a}");

  // check-regime
  auto* chk = app.add_subcommand("check-regime", "Check a power-law threshold/scale regime");
  double chk_beta = 0.0, chk_c = 1.0;
  std::optional<double> chk_gamma;
  std::string chk_model;
  chk->add_option("--beta", chk_beta, "Threshold exponent beta in (0, 1)")->required();
  chk->add_option("--gamma", chk_gamma, "Scale exponent gamma in (0, 1/2), v_n = n^gamma");
  chk->add_option("--threshold-c", chk_c, "Threshold scale c")->capture_default_str();
  chk->add_option("--model", chk_model, "Model file (default: unit volatilities)");

  // run-experiment
  auto* exp = app.add_subcommand("run-experiment", "Monte Carlo / oracle verification runs");
  std::string exp_mode, exp_model, clt_reference = "sigma1";
  double exp_c = 6.0;
  std::optional<double> exp_beta, exp_gamma, exp_tol;
  std::size_t exp_n = 1000, exp_reps = 1000;
  std::vector<double> exp_grid, exp_dir{1.0, 0.0, 0.0};
  double exp_level = 0.0;
  exp->add_option("--mode", exp_mode, "consistency | clt | ldp | mdp | filter")
      ->required()
      ->check(CLI::IsMember({"consistency", "clt", "ldp", "mdp", "filter"}));
  exp->add_option("--model", exp_model, "Model file")->required();
  exp->add_option("--threshold-c", exp_c, "Threshold scale c")->capture_default_str();
  exp->add_option("--threshold-beta", exp_beta, "Threshold exponent (omit for the untruncated estimator)");
  exp->add_option("--gamma", exp_gamma, "Scale exponent for mdp mode");
  exp->add_option("--n", exp_n, "Grid size (clt, filter)")->capture_default_str();
  exp->add_option("--n-grid", exp_grid, "Comma-separated grid sizes (consistency, ldp, mdp)")->delimiter(',');
  exp->add_option("--reps", exp_reps, "Monte Carlo replications")->capture_default_str();
  exp->add_option("--direction", exp_dir, "Event direction u1,u2,u3")->delimiter(',')->capture_default_str();
  exp->add_option("--level", exp_level, "Event level a")->capture_default_str();
  exp->add_option("--tolerance", exp_tol,
                  "Assertion tolerance (ldp 0.1 and mdp 0.35 relative gap; clt 0.1 relative diagonal error; "
                  "filter 0.95 minimum flagged fraction)");
  exp->add_option("--clt-reference", clt_reference, "clt target: sigma1 or hessian (= 2 sigma1)")
      ->check(CLI::IsMember({"sigma1", "hessian"}))
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto manifest_config = [&](const CLI::App* sub) {
      json cfg = echo_options(*sub);
      cfg["seed"] = g.seed;
      cfg["workers"] = g.workers;
      cfg["assert"] = g.assert_mode;
      return cfg;
    };

    if (*sim) {
      const fs::path dir = require_out(g, "simulate");
      const ModelSpec model = load_model_file(sim_model);
      const auto res = simulate_path(model, sim_n, g.seed);
      std::ostringstream csv;
      write_path_csv(csv, res.path);
      write_text_file(dir / "path.csv", csv.str());
      json truth = {{"seed", g.seed},
                    {"n", sim_n},
                    {"sum_sq1", res.truth.sum_sq1},
                    {"sum_sq2", res.truth.sum_sq2},
                    {"sum_cross", res.truth.sum_cross},
                    {"integrated", vec_json(to_eigen(true_vol_vector(model, 1.0)))}};
      write_text_file(dir / "truth.json", truth.dump(2) + "\n");
      write_manifest(dir, "simulate", manifest_config(sim));
      out << "wrote " << (dir / "path.csv").string() << "\n";
      return kExitOk;
    }

    if (*est) {
      const fs::path dir = require_out(g, "estimate");
      const SampledPath path = read_path_csv(fs::path(est_path));
      if (path.n == 0) throw std::invalid_argument("path file '" + est_path + "' has no increments");
      double r = std::numeric_limits<double>::infinity();
      if (est_r) {
        if (!(*est_r > 0.0)) throw std::invalid_argument("--r-value must be > 0");
        r = *est_r;
      } else if (est_beta) {
        r = ThresholdFn(est_c, *est_beta).for_grid(path.n);
      }
      ResultTable table{{"k", "q1", "q2", "c"}, {}};
      const auto running = running_estimator(path, r);
      for (std::size_t k = 0; k < running.size(); ++k) {
        table.add_row({static_cast<double>(k + 1), running[k].q1, running[k].q2, running[k].c});
      }
      emit_results(table, {{"r", number_or_null(r)}, {"n", path.n}}, dir, "estimate", g.seed);
      write_manifest(dir, "estimate", manifest_config(est));
      out << "wrote " << (dir / "estimate.csv").string() << "\n";
      return kExitOk;
    }

    if (*rate) {
      const ModelSpec model = load_model_file(rate_model);
      const RateContext ctx(model);
      json report = {{"mean", vec_json(ctx.mean())}, {"sigma1_matrix", mat_json(ctx.sigma1())}};
      bool any = false;
      if (!rate_x.empty()) {
        any = true;
        const VolVector x = to_vol(to_vec3(rate_x, "--x"));
        const auto sol = i_ldp_solve(ctx, x);
        json q = {{"x", rate_x},
                  {"i_ldp", ext_to_json(sol.value)},
                  {"optimizer",
                   {{"status", sol.status},
                    {"iterations", sol.iterations},
                    {"gradient_norm", sol.gradient_norm},
                    {"maximizer", vec_json(to_eigen(sol.maximizer))}}}};
        try {
          q["i_mdp"] = i_mdp(ctx, x);
        } catch (const SingularMatrixError& e) {
          q["i_mdp"] = nullptr;
          q["i_mdp_error"] = e.what();
        }
        if (model.constant_diffusion() && model.sigma1().values()[0] > 0.0 && model.sigma2().values()[0] > 0.0) {
          q["i_ldp_constant"] = ext_to_json(i_ldp_constant(model.sigma1().values()[0],
                                                           model.sigma2().values()[0], model.rho().values()[0], x));
        }
        report["point"] = q;
      }
      if (!rate_lambda.empty()) {
        any = true;
        const LambdaVec lam = to_lambda(to_vec3(rate_lambda, "--lambda"));
        report["lambda"] = {{"at", rate_lambda}, {"value", ext_to_json(lambda_fn(ctx, lam))}};
      }
      if (!rate_knots.empty()) {
        any = true;
        const auto phi = read_knots_file(rate_knots);
        json p = {{"file", rate_knots}, {"j_ldp_ac", ext_to_json(j_ldp_ac(ctx, phi))}};
        try {
          p["j_mdp"] = j_mdp(ctx, phi);
        } catch (const SingularMatrixError& e) {
          p["j_mdp"] = nullptr;
          p["j_mdp_error"] = e.what();
        }
        report["path"] = p;
      }
      if (!rate_dir.empty() || rate_level) {
        if (rate_dir.empty() || !rate_level) throw std::invalid_argument("--direction and --level go together");
        any = true;
        const Eigen::Vector3d u = to_vec3(rate_dir, "--direction");
        const auto c = contract(ctx, u, *rate_level);
        report["half_space"] = {{"direction", rate_dir},
                                {"level", *rate_level},
                                {"ldp_rate", ext_to_json(c.value)},
                                {"ldp_multiplier", c.multiplier},
                                {"ldp_iterations", c.iterations},
                                {"mdp_rate", contract_mdp(ctx, u, *rate_level)}};
      }
      if (!any) throw std::invalid_argument("rate-eval needs a query: --x, --lambda, --path-knots or --direction/--level");
      out << report.dump(2) << "\n";
      if (!g.out.empty()) {
        write_text_file(fs::path(g.out) / "rate_eval.json", report.dump(2) + "\n");
        write_manifest(g.out, "rate-eval", manifest_config(rate));
      }
      return kExitOk;
    }

    if (*chk) {
      const PowerLawRegime regime(ThresholdFn(chk_c, chk_beta), chk_gamma);
      const ModelSpec model = chk_model.empty() ? ModelSpec::constant(1.0, 1.0, 0.0) : load_model_file(chk_model);
      json report = json::object();
      bool pass = true;
      auto emit = [&](const char* label, const RegimeReport& rep) {
        json checks = json::array();
        out << label << ":\n";
        for (const auto& c : rep.checks) {
          out << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  margin " << format_number(c.margin)
              << "  [" << c.statement << "]\n";
          checks.push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"statement", c.statement}});
        }
        report[label] = {{"pass", rep.all_pass()}, {"checks", checks}};
        pass = pass && rep.all_pass();
      };
      emit("ldp", check_ldp(regime));
      if (chk_gamma) emit("mdp", check_mdp(regime, model));
      out << "verdict: " << (pass ? "PASS" : "FAIL") << "\n";
      if (!g.out.empty()) {
        write_text_file(fs::path(g.out) / "check_regime.json", report.dump(2) + "\n");
        write_manifest(g.out, "check-regime", manifest_config(chk));
      }
      if (g.assert_mode && !pass) throw AssertionFailure("regime fails its admissibility conditions");
      return kExitOk;
    }

    if (*exp) {
      const fs::path dir = require_out(g, "run-experiment");
      ExperimentSetup setup{load_model_file(exp_model), std::nullopt, exp_gamma, g.workers};
      if (exp_beta) setup.threshold = ThresholdFn(exp_c, *exp_beta);
      ResultTable table;
      json summary = {{"mode", exp_mode}, {"seed", g.seed}};
      std::string violation;

      if (exp_mode == "consistency") {
        if (exp_grid.empty()) throw std::invalid_argument("consistency needs --n-grid");
        const auto rows = run_consistency(setup, to_sizes(exp_grid, "--n-grid"), exp_reps, g.seed);
        table.columns = {"n", "reps", "r", "thr_mae_q1", "thr_mae_q2", "thr_mae_c",
                         "plain_mae_q1", "plain_mae_q2", "plain_mae_c"};
        bool decreasing = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const auto& r = rows[i];
          table.add_row({double(r.n), double(r.reps), r.r, r.threshold_mae[0], r.threshold_mae[1], r.threshold_mae[2],
                         r.plain_mae[0], r.plain_mae[1], r.plain_mae[2]});
          if (i > 0 && !(r.threshold_mae[0] < rows[i - 1].threshold_mae[0])) decreasing = false;
        }
        summary["threshold_error_decreasing"] = decreasing;
        if (!decreasing) violation = "threshold q1 error does not decrease along the grid";
      } else if (exp_mode == "clt") {
        const auto rep = run_clt(setup, exp_n, exp_reps, g.seed);
        table.columns = {"i", "j", "sample_cov", "sigma1", "lambda_hessian"};
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            table.add_row({double(i + 1), double(j + 1), rep.sample_cov(i, j), rep.sigma1(i, j), rep.lambda_hessian(i, j)});
          }
        }
        summary["n"] = rep.n;
        summary["reps"] = rep.reps;
        summary["sample_mean"] = vec_json(rep.sample_mean);
        summary["max_rel_diag_err_sigma1"] = rep.max_rel_diag_err_sigma1;
        summary["max_rel_diag_err_hessian"] = rep.max_rel_diag_err_hessian;
        summary["max_abs_offdiag"] = rep.max_abs_offdiag;
        const double tol = exp_tol.value_or(0.1);
        const double err = clt_reference == "sigma1" ? rep.max_rel_diag_err_sigma1 : rep.max_rel_diag_err_hessian;
        if (err > tol || rep.max_abs_offdiag >= 0.05) {
          violation = "sample covariance deviates from " + clt_reference + " (relative diagonal error " +
                      format_number(err) + ")";
        }
      } else if (exp_mode == "ldp" || exp_mode == "mdp") {
        if (exp_grid.empty()) throw std::invalid_argument(exp_mode + " needs --n-grid");
        EventSpec ev;
        ev.statistic = exp_mode == "ldp" ? Statistic::LdpLevel : Statistic::MdpScaled;
        ev.direction = to_vec3(exp_dir, "--direction");
        ev.level = exp_level;
        ev.gamma = exp_gamma;
        const auto grid = to_sizes(exp_grid, "--n-grid");
        const auto rep = exp_mode == "ldp" ? ldp_slope(setup, ev, grid, exp_reps, g.seed)
                                           : mdp_slope(setup, ev, grid, exp_reps, g.seed);
        table.columns = {"n", "reps", "p_hat", "ci_low", "ci_high", "slope", "reference_rate", "gap"};
        if (exp_mode == "mdp") {
          table.columns.push_back("oracle_slope");
          table.columns.push_back("reference_sigma1");
        }
        for (const auto& r : rep.rows) {
          std::vector<double> row{double(r.n), double(r.reps), r.p_hat, r.ci_low, r.ci_high, r.slope, r.reference, r.gap};
          if (exp_mode == "mdp") {
            row.push_back(r.oracle_slope);
            row.push_back(r.reference_sigma1);
          }
          table.add_row(std::move(row));
        }
        const auto& last = rep.rows.back();
        const double rel = rep.reference > 0.0 ? std::abs(last.gap) / rep.reference : std::abs(last.gap);
        summary["reference_rate"] = number_or_null(rep.reference);
        summary["gap_shrinking"] = rep.gap_shrinking;
        summary["source"] = rep.source;
        summary["relative_gap_last"] = number_or_null(rel);
        summary["lower_bound_only_last"] = last.lower_bound_only;
        const double tol = exp_tol.value_or(exp_mode == "ldp" ? 0.1 : 0.35);
        summary["tolerance"] = tol;
        if (!(rel <= tol)) violation = "relative gap " + format_number(rel) + " exceeds " + format_number(tol);
      } else {
        const auto rep = jump_filter_report(setup, exp_n, exp_reps, g.seed);
        table.columns = {"leg", "jump_cells", "flagged_cells", "flagged_fraction", "residual_jump_mass"};
        for (int l = 0; l < 2; ++l) {
          table.add_row({double(l + 1), double(rep.jump_cells[l]), double(rep.flagged_cells[l]),
                         rep.flagged_fraction[l], rep.residual_jump_mass[l]});
        }
        summary["r"] = rep.r;
        summary["has_jump_cells"] = rep.has_jump_cells;
        summary["mean_bias"] = vec_json(rep.mean_bias);
        if (!rep.has_jump_cells) summary["note"] = "no jump cells";
        const double tol = exp_tol.value_or(0.95);
        for (int l = 0; l < 2; ++l) {
          if (rep.jump_cells[l] > 0 && !(rep.flagged_fraction[l] > tol)) {
            violation = "leg " + std::to_string(l + 1) + " flagged fraction below " + format_number(tol);
          }
        }
      }
      summary["assertion_violation"] = violation.empty() ? json(nullptr) : json(violation);
      emit_results(table, summary, dir, exp_mode, g.seed);
      write_manifest(dir, "run-experiment", manifest_config(exp));
      out << "wrote " << (dir / (exp_mode + ".csv")).string() << "\n";
      if (!violation.empty()) {
        err << "acceptance: " << violation << "\n";
        if (g.assert_mode) return kExitAssertion;
      }
      return kExitOk;
    }
  } catch (const AssertionFailure& e) {
    err << "acceptance: " << e.what() << "\n";
    return kExitAssertion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace tvol
