#include "dicelp/exact.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace dicelp {

namespace {

constexpr double kResidualTol = 1e-9;
constexpr double kUnitEigenTol = 1e-8;

Eigen::VectorXd clamp_tiny_negatives(Eigen::VectorXd v) {
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      if (v[i] < -1e-12) throw NumericalFailure("visitation entry below -1e-12");
      v[i] = 0.0;
    }
  }
  return v;
}

}  // namespace

Eigen::VectorXd solve_q(const TabularMdp& mdp, const Policy& pi) {
  if (mdp.gamma >= 1.0)
    throw UnsupportedConfig("solve_q requires gamma < 1; use solve_undiscounted");
  const Eigen::MatrixXd p = policy_operator(mdp, pi);
  const int n = mdp.num_pairs();
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p;
  const Eigen::VectorXd r = mdp.reward_vector();
  Eigen::VectorXd q = sys.partialPivLu().solve(r);
  const double residual = (q - r - mdp.gamma * p * q).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(residual) || residual > kResidualTol)
    throw NumericalFailure("Bellman residual " + std::to_string(residual) + " exceeds tolerance");
  return q;
}

Eigen::VectorXd solve_d(const TabularMdp& mdp, const Policy& pi) {
  if (mdp.gamma >= 1.0)
    throw UnsupportedConfig("solve_d requires gamma < 1; use solve_undiscounted");
  const Eigen::MatrixXd p_star = policy_operator(mdp, pi).transpose();
  const int n = mdp.num_pairs();
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p_star;
  const Eigen::VectorXd b = (1.0 - mdp.gamma) * initial_distribution(mdp, pi);
  Eigen::VectorXd d = sys.partialPivLu().solve(b);
  const double residual = (d - b - mdp.gamma * p_star * d).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(residual) || residual > kResidualTol)
    throw NumericalFailure("fixed-point residual " + std::to_string(residual) + " exceeds tolerance");
  d = clamp_tiny_negatives(std::move(d));
  if (std::abs(d.sum() - 1.0) > 1e-9) throw NumericalFailure("visitation does not sum to 1");
  return d / d.sum();
}

double policy_value(const TabularMdp& mdp, const Policy& pi) {
  const Eigen::VectorXd q = solve_q(mdp, pi);
  const Eigen::VectorXd d = solve_d(mdp, pi);
  const double rho_q = (1.0 - mdp.gamma) * initial_distribution(mdp, pi).dot(q);
  const double rho_d = d.dot(mdp.reward_vector());
  if (std::abs(rho_q - rho_d) > 1e-8)
    throw NumericalFailure("strong duality violated: |rho_Q - rho_d| = " +
                           std::to_string(std::abs(rho_q - rho_d)));
  return rho_q;
}

int unit_eigenspace_dimension(const TabularMdp& mdp, const Policy& pi) {
  const Eigen::MatrixXd p_star = policy_operator(mdp, pi).transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(p_star, /*computeEigenvectors=*/false);
  int count = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) < kUnitEigenTol) ++count;
  }
  return count;
}

UndiscountedSolution solve_undiscounted(const TabularMdp& mdp, const Policy& pi) {
  const Eigen::MatrixXd p = policy_operator(mdp, pi);
  const Eigen::MatrixXd p_star = p.transpose();
  const int n = mdp.num_pairs();

  Eigen::EigenSolver<Eigen::MatrixXd> es(p_star);
  int unit_index = -1;
  int unit_count = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) < kUnitEigenTol) {
      ++unit_count;
      unit_index = i;
    }
  }
  if (unit_count != 1)
    throw AssumptionViolation(
        "ergodicity assumption violated: eigenvalue-1 eigenspace of P^pi_* has dimension " +
        std::to_string(unit_count));

  Eigen::VectorXd d = es.eigenvectors().col(unit_index).real();
  if (d.sum() < 0.0) d = -d;
  d = clamp_tiny_negatives(std::move(d));
  d /= d.sum();
  const double residual = (d - p_star * d).lpNorm<Eigen::Infinity>();
  if (residual > kResidualTol)
    throw NumericalFailure("stationary residual " + std::to_string(residual) + " exceeds tolerance");

  UndiscountedSolution out;
  out.visitation = d;
  out.rho = d.dot(mdp.reward_vector());

  // Existence of Q with Q = R + P^pi Q - rho: check consistency of the
  // (rank-deficient) linear system via least squares.
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - p;
  const Eigen::VectorXd rhs = mdp.reward_vector().array() - out.rho;
  const Eigen::VectorXd q = sys.colPivHouseholderQr().solve(rhs);
  if ((sys * q - rhs).lpNorm<Eigen::Infinity>() > 1e-6)
    throw NumericalFailure("undiscounted primal constraint inconsistent");

  return out;
}

ExactSolution exact_solve(const TabularMdp& mdp, const Policy& pi) {
  ExactSolution sol;
  if (mdp.gamma < 1.0) {
    sol.q_values = solve_q(mdp, pi);
    sol.visitation = solve_d(mdp, pi);
    sol.rho = policy_value(mdp, pi);
  } else {
    const UndiscountedSolution u = solve_undiscounted(mdp, pi);
    sol.q_values = Eigen::VectorXd::Zero(mdp.num_pairs());  // defined only up to an offset
    sol.visitation = u.visitation;
    sol.rho = u.rho;
    sol.lambda_star = u.rho;
  }
  return sol;
}

std::string exact_solution_to_json(const ExactSolution& sol) {
  nlohmann::json j;
  j["q_values"] = std::vector<double>(sol.q_values.data(), sol.q_values.data() + sol.q_values.size());
  j["visitation"] =
      std::vector<double>(sol.visitation.data(), sol.visitation.data() + sol.visitation.size());
  j["rho"] = sol.rho;
  if (sol.lambda_star) j["lambda_star"] = *sol.lambda_star;
  else j["lambda_star"] = nullptr;
  return j.dump(2);
}

}  // namespace dicelp
