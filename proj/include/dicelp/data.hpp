#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dicelp/mdp.hpp"

namespace dicelp {

// One behavior-agnostic experience tuple. Each sample carries an independent
// draw s0 ~ mu0 so initial-state and transition terms can share a minibatch.
struct Sample {
  int s0 = 0;
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

struct OfflineDataset {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Sample> samples;
  Eigen::VectorXd counts_sa;  // empirical counts over S*A

  std::size_t size() const { return samples.size(); }
};

// Samples n_trajectories * horizon transitions from behavior-policy rollouts.
OfflineDataset collect(const TabularMdp& mdp, const Policy& behavior, int n_trajectories,
                       int horizon, std::uint64_t rng_seed);

// Empirical d^D: counts / N. Throws std::invalid_argument on empty dataset.
Eigen::VectorXd empirical_dD(const OfflineDataset& dataset);

struct RatioBound {
  double c = 0.0;       // max over S*A of d_pi / dD where d_pi > 0
  bool bounded = true;  // false iff d_pi > 0 somewhere dD = 0 (coverage assumption violated)
};

RatioBound ratio_bound(const Eigen::VectorXd& dD, const Eigen::VectorXd& d_pi);

// CSV with header s0,s,a,r,s_next. When an MDP is given, the loader checks
// index ranges and that r matches R(s,a).
void save_dataset_csv(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset_csv(const std::string& path, const TabularMdp* mdp = nullptr);

}  // namespace dicelp
