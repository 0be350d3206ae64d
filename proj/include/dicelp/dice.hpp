#pragma once

#include <Eigen/Dense>
#include <string>

#include "dicelp/convex.hpp"
#include "dicelp/data.hpp"
#include "dicelp/exact.hpp"
#include "dicelp/mdp.hpp"

namespace dicelp {

// The five knobs of the regularized Lagrangian plus the convex pair.
struct DiceConfig {
  double alpha_q = 0.0;
  double alpha_zeta = 0.0;
  int alpha_r = 1;  // in {0, 1}
  bool positivity = false;
  bool normalization = false;
  ConvexFn f1 = half_square();
  ConvexFn f2 = half_square();

  void validate() const;
  std::string describe() const;
};

DiceConfig named_config(const std::string& name);

std::string config_to_json(const DiceConfig& config);
DiceConfig config_from_json(const std::string& text);

// A (Q, zeta, lambda) point, tabular over S*A.
struct Solution {
  Eigen::VectorXd q;
  Eigen::VectorXd zeta;
  double lam = 0.0;
};

struct EstimateTriple {
  double rho_q = 0.0;
  double rho_zeta = 0.0;
  double rho_lagrangian = 0.0;
};

// Population view of a problem: target policy against a fixed dataset
// distribution dD over S*A.
struct ExactProblem {
  TabularMdp mdp;
  Policy pi;
  Eigen::VectorXd dD;
};

// Full regularized objective value at a point, population expectations.
double lagrangian_value(const DiceConfig& config, const ExactProblem& problem,
                        const Solution& sol);

// Sample-average objective over a dataset; a' ~ pi(s') marginalized exactly.
double lagrangian_value(const DiceConfig& config, const OfflineDataset& dataset,
                        const Policy& pi, double gamma, const Solution& sol);

struct LagrangianGradients {
  Eigen::VectorXd wrt_q;
  Eigen::VectorXd wrt_zeta;
  double wrt_lambda = 0.0;  // meaningful only when normalization is on
};

// Exact gradients of the regularized objective; shared by the saddle
// certification tests and the exact-mode optimizer.
LagrangianGradients lagrangian_gradients(const DiceConfig& config, const ExactProblem& problem,
                                         const Solution& sol);

// rho_Q = (1-gamma) <mu0 pi, Q> + lambda.
double estimate_primal(const Solution& sol, const TabularMdp& mdp, const Policy& pi);

// rho_zeta = sum dD * zeta * R. Always uses the true reward.
double estimate_dual(const Solution& sol, const Eigen::VectorXd& dD,
                     const Eigen::VectorXd& reward);

// rho_{Q,zeta} = rho_Q + rho_zeta + E_dD[zeta (gamma P^pi Q - Q - lambda)].
double estimate_lagrangian(const Solution& sol, const ExactProblem& problem);

EstimateTriple estimate_all(const Solution& sol, const ExactProblem& problem);

struct ClosedFormResult {
  Solution sol;
  double saddle_value = 0.0;
};

// Closed-form saddle point for the one-sided regularization cases (and the
// unregularized baseline). Throws UnsupportedConfig when both regularizers
// are positive and BiasedConfig when normalization is requested together
// with (alpha_q > 0, alpha_r = 1).
ClosedFormResult closed_form_solution(const DiceConfig& config, const TabularMdp& mdp,
                                      const Policy& pi, const Eigen::VectorXd& dD);

enum class Bias { Unbiased, Biased };

struct BiasProfile {
  Bias primal = Bias::Biased;
  Bias dual = Bias::Biased;
  Bias lagrangian = Bias::Biased;
};

const char* to_string(Bias b);

// The regularization-profiling classification of the three estimators.
BiasProfile unbiasedness_table(const DiceConfig& config);

}  // namespace dicelp
