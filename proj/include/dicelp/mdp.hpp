#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dicelp/errors.hpp"

namespace dicelp {

// Finite MDP. Transitions are stored as a (S*A) x S row-stochastic matrix;
// state-action pairs are flattened row-major, index = s * n_actions + a,
// everywhere in this library.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd transition;  // (S*A) x S, each row a distribution over s'
  Eigen::MatrixXd reward;      // S x A
  Eigen::VectorXd mu0;         // S, initial state distribution
  double gamma = 0.0;

  int num_pairs() const { return n_states * n_actions; }
  int pair_index(int s, int a) const { return s * n_actions + a; }

  // Reward table flattened over state-action pairs.
  Eigen::VectorXd reward_vector() const;

  // Throws std::invalid_argument if shapes or stochasticity invariants fail.
  void validate() const;
};

// Per-state distribution over actions.
struct Policy {
  Eigen::MatrixXd probs;  // S x A

  void validate() const;
};

struct Trajectory {
  int initial_state = 0;
  std::vector<int> states;       // s_t
  std::vector<int> actions;      // a_t
  std::vector<double> rewards;   // r_t
  std::vector<int> next_states;  // s_{t+1}
};

// Environment plus a ready-made target/behavior policy pair.
struct GridInstance {
  TabularMdp mdp;
  Policy target;
  Policy behavior;
};

// side x side gridworld, 4 actions (left/right/up/down), walls clamp.
// Reward depends only on the current cell: exp(-0.2|x-(side-1)| - 0.2|y-(side-1)|).
// Policies are the corner-seeking optimal policy mixed with uniform exploration.
GridInstance build_grid(int side, double target_explore = 0.1, double behavior_explore = 0.7,
                        double gamma = 0.99);

// P^pi over state-action pairs: entry [(s,a),(s',a')] = T(s'|s,a) * pi(a'|s').
// Its transpose is the adjoint operator P^pi_*.
Eigen::MatrixXd policy_operator(const TabularMdp& mdp, const Policy& pi);

// Initial state-action distribution mu0(s) * pi(a|s), flattened.
Eigen::VectorXd initial_distribution(const TabularMdp& mdp, const Policy& pi);

Trajectory rollout(const TabularMdp& mdp, const Policy& pi, int horizon, std::uint64_t rng_seed);

// result[s][a] = (1-weight) * pi[s][a] + weight / n_actions.
Policy mix_uniform(const Policy& pi, double weight);

// JSON (de)serialization; load validates invariants.
TabularMdp load_mdp_json(const std::string& path);
void save_mdp_json(const TabularMdp& mdp, const std::string& path);
Policy load_policy_json(const std::string& path);
void save_policy_json(const Policy& pi, const std::string& path);

}  // namespace dicelp
