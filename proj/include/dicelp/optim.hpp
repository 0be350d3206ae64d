#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dicelp/dice.hpp"

namespace dicelp {

struct Parametrization {
  enum class Kind { Tabular, Linear };
  Kind kind = Kind::Tabular;
  Eigen::MatrixXd features;  // (S*A) x k, linear only

  static Parametrization tabular() { return {}; }
  static Parametrization linear(Eigen::MatrixXd phi);
};

struct SgdaSettings {
  double lr_primal = 1e-3;
  double lr_dual = 1e-3;
  double lr_lambda = 1e-3;
  long steps = 10000;
  int batch_size = 2048;
  bool averaging = true;  // uniform average over the last half of iterates
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct TraceRecord {
  long step = 0;
  double rho_q = 0.0;
  double rho_zeta = 0.0;
  double rho_lagrangian = 0.0;
  double objective = 0.0;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
};

void save_trace_csv(const TrainingTrace& trace, double true_rho, const std::string& path);

struct SgdaResult {
  Solution sol;
  TrainingTrace trace;
};

// Gradient descent on (Q, lambda), ascent on zeta (through u with zeta = u^2
// when positivity is on). Exact mode uses population gradients and is fully
// deterministic; dataset mode uses seeded minibatches.
SgdaResult sgda(const DiceConfig& config, const ExactProblem& problem,
                const Parametrization& param, const SgdaSettings& settings);
SgdaResult sgda(const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
                const TabularMdp& mdp, const Parametrization& param,
                const SgdaSettings& settings);

struct PrimalFormResult {
  Eigen::VectorXd q;  // expanded over S*A
  TrainingTrace trace;
  bool exact_mode = true;  // which objective produced the result
};

// Minimization over Q only, the dual variable analytically maximized out.
// Exact mode marginalizes s' inside the conjugate (unbiased); dataset mode
// applies the conjugate per sample (biased under stochastic transitions).
PrimalFormResult unconstrained_primal(const DiceConfig& config, const ExactProblem& problem,
                                      const Parametrization& param, const SgdaSettings& settings);
PrimalFormResult unconstrained_primal(const DiceConfig& config, const OfflineDataset& dataset,
                                      const Policy& pi, const TabularMdp& mdp,
                                      const Parametrization& param, const SgdaSettings& settings);

// zeta(s,a) = f2*'((alpha_r R + gamma P^pi Q - Q) / alpha_zeta), exact operator.
Eigen::VectorXd recover_zeta(const Eigen::VectorXd& q, const DiceConfig& config,
                             const TabularMdp& mdp, const Policy& pi);

struct DualFormResult {
  Eigen::VectorXd zeta;
  TrainingTrace trace;
  bool exact_mode = true;
};

// Maximization over zeta only, the primal variable minimized out through f1*.
DualFormResult unconstrained_dual(const DiceConfig& config, const ExactProblem& problem,
                                  const Parametrization& param, const SgdaSettings& settings);
DualFormResult unconstrained_dual(const DiceConfig& config, const OfflineDataset& dataset,
                                  const Policy& pi, const TabularMdp& mdp,
                                  const Parametrization& param, const SgdaSettings& settings);

}  // namespace dicelp
