#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "dicelp/mdp.hpp"

namespace dicelp {

struct ExactSolution {
  Eigen::VectorXd q_values;   // Q^pi over S*A
  Eigen::VectorXd visitation; // d^pi over S*A
  double rho = 0.0;
  std::optional<double> lambda_star;  // average reward, undiscounted case only
};

// Q^pi = (I - gamma P^pi)^{-1} R. Requires gamma < 1.
Eigen::VectorXd solve_q(const TabularMdp& mdp, const Policy& pi);

// d^pi = (I - gamma P^pi_*)^{-1} (1-gamma) mu0 pi. Requires gamma < 1.
Eigen::VectorXd solve_d(const TabularMdp& mdp, const Policy& pi);

// rho(pi), computed from both Q^pi and d^pi; throws NumericalFailure if the
// two forms disagree beyond 1e-8 (strong duality must hold exactly).
double policy_value(const TabularMdp& mdp, const Policy& pi);

struct UndiscountedSolution {
  Eigen::VectorXd visitation;  // stationary d^pi
  double rho = 0.0;            // average per-step reward, equals lambda*
};

// gamma = 1: unique stationary distribution of P^pi_* and average reward.
// Throws AssumptionViolation if the unit-eigenvalue eigenspace is not
// one-dimensional (the ergodicity assumption).
UndiscountedSolution solve_undiscounted(const TabularMdp& mdp, const Policy& pi);

// Dimension of the eigenvalue-1 eigenspace of P^pi_* (1 for ergodic chains).
// The fixed-point system d = P^pi_* d alone is under-determined whenever this
// is >= 1; the normalization constraint is what pins the solution down.
int unit_eigenspace_dimension(const TabularMdp& mdp, const Policy& pi);

// Full exact solve (dispatches on gamma).
ExactSolution exact_solve(const TabularMdp& mdp, const Policy& pi);

std::string exact_solution_to_json(const ExactSolution& sol);

}  // namespace dicelp
