// Command-line harness: exact solves, optimization runs, regularization
// sweeps, and reward-robustness reports over tabular MDPs.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dicelp/data.hpp"
#include "dicelp/dice.hpp"
#include "dicelp/errors.hpp"
#include "dicelp/exact.hpp"
#include "dicelp/mdp.hpp"
#include "dicelp/optim.hpp"
#include "dicelp/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitDiverged = 4;

dicelp::DiceConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return dicelp::config_from_json(text);
}

int cmd_solve(const std::string& mdp_path, const std::string& policy_path, double gamma_override,
              bool has_gamma, const std::string& out_path) {
  dicelp::TabularMdp mdp = dicelp::load_mdp_json(mdp_path);
  const dicelp::Policy pi = dicelp::load_policy_json(policy_path);
  if (has_gamma) {
    mdp.gamma = gamma_override;
    mdp.validate();
  }
  const dicelp::ExactSolution sol = dicelp::exact_solve(mdp, pi);
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write output file: " + out_path);
  out << dicelp::exact_solution_to_json(sol) << "\n";
  std::cerr << "solve: rho = " << sol.rho << "\n";
  return kExitOk;
}

int cmd_run(const std::string& mdp_path, const std::string& target_path,
            const std::string& behavior_path, const std::string& config_path,
            const std::string& mode, int n_traj, int horizon,
            const dicelp::SgdaSettings& settings, const std::string& out_path) {
  const dicelp::TabularMdp mdp = dicelp::load_mdp_json(mdp_path);
  const dicelp::Policy target = dicelp::load_policy_json(target_path);
  const dicelp::Policy behavior = dicelp::load_policy_json(behavior_path);
  const dicelp::DiceConfig config = load_config_file(config_path);
  const double true_rho = dicelp::policy_value(mdp, target);

  dicelp::SgdaResult result;
  if (mode == "exact") {
    const dicelp::ExactProblem problem{mdp, target, dicelp::solve_d(mdp, behavior)};
    result = dicelp::sgda(config, problem, dicelp::Parametrization::tabular(), settings);
  } else {
    const dicelp::OfflineDataset dataset =
        dicelp::collect(mdp, behavior, n_traj, horizon, settings.rng_seed);
    result =
        dicelp::sgda(config, dataset, target, mdp, dicelp::Parametrization::tabular(), settings);
  }
  dicelp::save_trace_csv(result.trace, true_rho, out_path);
  const dicelp::ExactProblem eval{mdp, target, dicelp::solve_d(mdp, behavior)};
  const dicelp::EstimateTriple est = dicelp::estimate_all(result.sol, eval);
  std::cerr << "run (" << config.describe() << ", " << mode << "): rho_q = " << est.rho_q
            << ", rho_zeta = " << est.rho_zeta << ", rho_lagrangian = " << est.rho_lagrangian
            << ", true rho = " << true_rho << "\n";
  return kExitOk;
}

// Dataset-mode sweep: average each estimator over independent datasets and
// classify against a 3-standard-error statistical tolerance.
dicelp::SweepReport sweep_dataset_mode(const dicelp::TabularMdp& mdp,
                                       const dicelp::Policy& target,
                                       const dicelp::Policy& behavior, double tolerance,
                                       int n_traj, int horizon, std::uint64_t seed) {
  constexpr int kSeeds = 10;
  std::vector<dicelp::SweepReport> per_seed;
  per_seed.reserve(kSeeds);
  for (int i = 0; i < kSeeds; ++i) {
    const dicelp::OfflineDataset ds = dicelp::collect(mdp, behavior, n_traj, horizon, seed + i);
    per_seed.push_back(dicelp::run_sweep(mdp, target, dicelp::empirical_dD(ds), tolerance));
  }
  dicelp::SweepReport report = per_seed[0];
  for (std::size_t row = 0; row < report.rows.size(); ++row) {
    double mean = 0.0;
    for (const auto& rep : per_seed) mean += rep.rows[row].estimate / kSeeds;
    double var = 0.0;
    for (const auto& rep : per_seed) {
      const double d = rep.rows[row].estimate - mean;
      var += d * d / (kSeeds - 1);
    }
    const double se = std::sqrt(var / kSeeds);
    auto& r = report.rows[row];
    r.estimate = mean;
    r.abs_error = std::abs(mean - r.true_rho);
    r.observed = r.abs_error < std::max(tolerance, 3.0 * se) ? dicelp::Bias::Unbiased
                                                             : dicelp::Bias::Biased;
  }
  return report;
}

int cmd_sweep(const std::string& mdp_path, const std::string& target_path,
              const std::string& behavior_path, double tolerance, const std::string& mode,
              int n_traj, int horizon, std::uint64_t seed, const std::string& out_path) {
  const dicelp::TabularMdp mdp = dicelp::load_mdp_json(mdp_path);
  const dicelp::Policy target = dicelp::load_policy_json(target_path);
  const dicelp::Policy behavior = dicelp::load_policy_json(behavior_path);

  dicelp::SweepReport report;
  if (mode == "exact") {
    report = dicelp::run_sweep(mdp, target, dicelp::solve_d(mdp, behavior), tolerance);
  } else {
    report = sweep_dataset_mode(mdp, target, behavior, tolerance, n_traj, horizon, seed);
  }
  dicelp::save_sweep_csv(report, out_path);
  std::cerr << "sweep: " << report.rows.size() << " rows, " << report.mismatches()
            << " classification mismatches (tolerance " << tolerance << ")\n";
  return kExitOk;
}

int cmd_robustness(const std::string& mdp_path, const std::string& target_path,
                   const std::string& behavior_path, const std::string& transform,
                   const std::string& out_path) {
  const dicelp::TabularMdp mdp = dicelp::load_mdp_json(mdp_path);
  const dicelp::Policy target = dicelp::load_policy_json(target_path);
  const dicelp::Policy behavior = dicelp::load_policy_json(behavior_path);
  const dicelp::RobustnessRow row =
      dicelp::run_robustness(mdp, target, dicelp::solve_d(mdp, behavior), transform);
  dicelp::save_robustness_csv({row}, out_path);
  std::cerr << "robustness (" << transform << "): dual back-transform error = "
            << std::abs(row.dual_back - row.true_rho)
            << ", primal back-transform error = " << std::abs(row.primal_back - row.true_rho)
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation toolkit for tabular MDPs"};
  app.require_subcommand(1);

  std::string mdp_path, policy_path, target_path, behavior_path, config_path, out_path;
  std::string mode = "exact", transform;
  double gamma_override = 0.0, tolerance = 1e-6;
  int n_traj = 400, horizon = 100;
  dicelp::SgdaSettings settings;

  auto* solve = app.add_subcommand("solve", "Exact policy evaluation (Q, visitation, rho)");
  solve->add_option("--mdp", mdp_path, "MDP JSON file")->required();
  solve->add_option("--policy", policy_path, "policy JSON file")->required();
  auto* gamma_opt = solve->add_option("--gamma", gamma_override,
                                      "override the MDP's discount (1 = average reward)");
  solve->add_option("--out", out_path, "output JSON file")->required();

  auto* run = app.add_subcommand("run", "Single saddle-point optimization run");
  run->add_option("--mdp", mdp_path)->required();
  run->add_option("--target", target_path)->required();
  run->add_option("--behavior", behavior_path)->required();
  run->add_option("--config", config_path, "knob config JSON (or {\"name\": ...})")->required();
  run->add_option("--mode", mode)->check(CLI::IsMember({"exact", "dataset"}));
  run->add_option("--n-traj", n_traj, "trajectories to collect (dataset mode)");
  run->add_option("--horizon", horizon, "steps per trajectory (dataset mode)");
  run->add_option("--steps", settings.steps, "optimization steps");
  run->add_option("--batch-size", settings.batch_size);
  run->add_option("--lr-primal", settings.lr_primal);
  run->add_option("--lr-dual", settings.lr_dual);
  run->add_option("--lr-lambda", settings.lr_lambda);
  run->add_option("--seed", settings.rng_seed);
  run->add_option("--out", out_path, "trace CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "Regularization-profiling sweep");
  sweep->add_option("--mdp", mdp_path)->required();
  sweep->add_option("--target", target_path)->required();
  sweep->add_option("--behavior", behavior_path)->required();
  sweep->add_option("--tolerance", tolerance, "unbiasedness classification tolerance")
      ->required();
  sweep->add_option("--mode", mode)->check(CLI::IsMember({"exact", "dataset"}));
  sweep->add_option("--n-traj", n_traj);
  sweep->add_option("--horizon", horizon);
  sweep->add_option("--seed", settings.rng_seed);
  sweep->add_option("--out", out_path, "report CSV")->required();

  auto* robust = app.add_subcommand("robustness", "Reward-transform robustness report");
  robust->add_option("--mdp", mdp_path)->required();
  robust->add_option("--target", target_path)->required();
  robust->add_option("--behavior", behavior_path)->required();
  robust->add_option("--transform", transform, "scale:<c>, shift:<b>, or exp")->required();
  robust->add_option("--out", out_path, "report CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (solve->parsed())
      return cmd_solve(mdp_path, policy_path, gamma_override, gamma_opt->count() > 0, out_path);
    if (run->parsed())
      return cmd_run(mdp_path, target_path, behavior_path, config_path, mode, n_traj, horizon,
                     settings, out_path);
    if (sweep->parsed())
      return cmd_sweep(mdp_path, target_path, behavior_path, tolerance, mode, n_traj, horizon,
                       settings.rng_seed, out_path);
    if (robust->parsed())
      return cmd_robustness(mdp_path, target_path, behavior_path, transform, out_path);
  } catch (const dicelp::Diverged& e) {
    std::cerr << "error: optimization diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const dicelp::AssumptionViolation& e) {
    std::cerr << "error: degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
