// Shared fixtures for the unit tests.
#pragma once

#include <random>

#include "dicelp/mdp.hpp"

namespace dicelp::testing {

inline TabularMdp chain2_mdp() {
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.transition = Eigen::MatrixXd(2, 2);
  mdp.transition << 0.0, 1.0, 0.0, 1.0;
  mdp.reward = Eigen::MatrixXd(2, 1);
  mdp.reward << 0.0, 1.0;
  mdp.mu0 = Eigen::Vector2d(1.0, 0.0);
  mdp.gamma = 0.5;
  mdp.validate();
  return mdp;
}

inline Policy chain2_pi() { return Policy{Eigen::MatrixXd::Ones(2, 1)}; }

inline TabularMdp single_state_mdp(double reward, double gamma) {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.transition = Eigen::MatrixXd::Ones(1, 1);
  mdp.reward = Eigen::MatrixXd::Constant(1, 1, reward);
  mdp.mu0 = Eigen::VectorXd::Ones(1);
  mdp.gamma = gamma;
  mdp.validate();
  return mdp;
}

// Random ergodic MDP: strictly positive transition rows keep the chain
// irreducible and aperiodic under any full-support policy.
inline TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.transition.resize(n_states * n_actions, n_states);
  mdp.reward.resize(n_states, n_actions);
  mdp.mu0.resize(n_states);
  for (int sa = 0; sa < n_states * n_actions; ++sa) {
    for (int s2 = 0; s2 < n_states; ++s2) mdp.transition(sa, s2) = unif(rng);
    mdp.transition.row(sa) /= mdp.transition.row(sa).sum();
  }
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) mdp.reward(s, a) = 2.0 * unif(rng) - 1.0;
  for (int s = 0; s < n_states; ++s) mdp.mu0[s] = unif(rng);
  mdp.mu0 /= mdp.mu0.sum();
  mdp.gamma = gamma;
  mdp.validate();
  return mdp;
}

inline Policy random_policy(int n_states, int n_actions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Policy pi{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) pi.probs(s, a) = unif(rng);
    pi.probs.row(s) /= pi.probs.row(s).sum();
  }
  pi.validate();
  return pi;
}

// Designed 3-state MDP separating the bias classifications: strongly
// negative rewards in state 0 make the case-ii positive part bind.
inline TabularMdp designed3_mdp() {
  TabularMdp mdp;
  mdp.n_states = 3;
  mdp.n_actions = 2;
  mdp.transition = Eigen::MatrixXd(6, 3);
  mdp.transition << 0.1, 0.6, 0.3,  //
      0.5, 0.2, 0.3,                //
      0.3, 0.4, 0.3,                //
      0.2, 0.2, 0.6,                //
      0.5, 0.3, 0.2,                //
      0.1, 0.1, 0.8;
  mdp.reward = Eigen::MatrixXd(3, 2);
  mdp.reward << -12.0, -9.0, 1.0, 1.5, 2.0, 2.5;
  mdp.mu0 = Eigen::Vector3d(0.7, 0.2, 0.1);
  mdp.gamma = 0.9;
  mdp.validate();
  return mdp;
}

inline Policy designed3_target() {
  Policy pi{Eigen::MatrixXd(3, 2)};
  pi.probs << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7;
  return pi;
}

inline Policy designed3_behavior() {
  Policy pi{Eigen::MatrixXd(3, 2)};
  pi.probs << 0.3, 0.7, 0.4, 0.6, 0.7, 0.3;
  return pi;
}

}  // namespace dicelp::testing
