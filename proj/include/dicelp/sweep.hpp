#pragma once

#include <string>
#include <vector>

#include "dicelp/dice.hpp"

namespace dicelp {

struct SweepRow {
  std::string config;     // knob descriptor
  std::string estimator;  // rho_q | rho_zeta | rho_lagrangian
  double estimate = 0.0;
  double true_rho = 0.0;
  double abs_error = 0.0;
  Bias expected = Bias::Biased;
  Bias observed = Bias::Biased;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double tolerance = 0.0;

  int mismatches() const;
};

// Enumerates the 8 one-sided-regularization rows (x3 estimators) plus the
// unregularized baseline, all via closed-form solutions in exact mode.
// Throws AssumptionViolation when the MDP cannot witness bias (constant
// reward or dD == d^pi).
SweepReport run_sweep(const TabularMdp& mdp, const Policy& target, const Eigen::VectorXd& dD,
                      double tolerance);

void save_sweep_csv(const SweepReport& report, const std::string& path);

struct RobustnessRow {
  std::string transform;
  double true_rho = 0.0;        // original reward (transformed space for exp)
  double dual_estimate = 0.0;   // in transformed space
  double dual_back = 0.0;       // back-transformed (== dual_estimate for exp)
  double primal_estimate = 0.0;
  double primal_back = 0.0;
};

// Solves (alpha_zeta=1, alpha_r=1) exactly under a transformed reward and
// back-transforms the estimates. Supported transforms:
// scale:<c>, shift:<b>, exp. For exp the comparison stays in transformed space.
RobustnessRow run_robustness(const TabularMdp& mdp, const Policy& target,
                             const Eigen::VectorXd& dD, const std::string& transform);

void save_robustness_csv(const std::vector<RobustnessRow>& rows, const std::string& path);

}  // namespace dicelp
