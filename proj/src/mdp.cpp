#include "dicelp/mdp.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace dicelp {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::VectorXd& p, const std::string& what) {
  if ((p.array() < -kStochasticTol).any()) {
    throw std::invalid_argument(what + " has negative entries");
  }
  if (std::abs(p.sum() - 1.0) > kStochasticTol) {
    throw std::invalid_argument(what + " does not sum to 1 (sum = " + std::to_string(p.sum()) + ")");
  }
}

}  // namespace

Eigen::VectorXd TabularMdp::reward_vector() const {
  Eigen::VectorXd r(num_pairs());
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) r[pair_index(s, a)] = reward(s, a);
  return r;
}

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("empty state or action space");
  if (transition.rows() != num_pairs() || transition.cols() != n_states)
    throw std::invalid_argument("transition tensor shape mismatch");
  if (reward.rows() != n_states || reward.cols() != n_actions)
    throw std::invalid_argument("reward table shape mismatch");
  if (mu0.size() != n_states) throw std::invalid_argument("mu0 shape mismatch");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must lie in [0, 1]");
  for (int sa = 0; sa < num_pairs(); ++sa) {
    check_distribution(transition.row(sa).transpose(),
                       "T[" + std::to_string(sa / n_actions) + "][" + std::to_string(sa % n_actions) + "]");
  }
  check_distribution(mu0, "mu0");
}

void Policy::validate() const {
  for (int s = 0; s < probs.rows(); ++s) {
    const Eigen::VectorXd row = probs.row(s).transpose();
    if ((row.array() < -kStochasticTol).any())
      throw std::invalid_argument("policy row " + std::to_string(s) + " has negative entries");
    if (std::abs(row.sum() - 1.0) > kStochasticTol)
      throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
  }
}

GridInstance build_grid(int side, double target_explore, double behavior_explore, double gamma) {
  if (side < 2) throw std::invalid_argument("grid side must be >= 2");
  if (target_explore < 0.0 || target_explore > 1.0 || behavior_explore < 0.0 ||
      behavior_explore > 1.0)
    throw std::invalid_argument("explore weights must lie in [0, 1]");

  const int n_states = side * side;
  const int n_actions = 4;  // left, right, up, down
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  mdp.reward = Eigen::MatrixXd::Zero(n_states, n_actions);
  mdp.mu0 = Eigen::VectorXd::Zero(n_states);
  mdp.mu0[0] = 1.0;  // start at (0, 0)

  auto cell = [side](int x, int y) { return y * side + x; };

  Policy optimal;
  optimal.probs = Eigen::MatrixXd::Zero(n_states, n_actions);

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int s = cell(x, y);
      const double r = std::exp(-0.2 * std::abs(x - (side - 1)) - 0.2 * std::abs(y - (side - 1)));
      for (int a = 0; a < n_actions; ++a) {
        mdp.reward(s, a) = r;  // reward on the pre-move cell
        int nx = x, ny = y;
        if (a == 0) nx = std::max(x - 1, 0);
        if (a == 1) nx = std::min(x + 1, side - 1);
        if (a == 2) ny = std::max(y - 1, 0);
        if (a == 3) ny = std::min(y + 1, side - 1);
        mdp.transition(mdp.pair_index(s, a), cell(nx, ny)) = 1.0;
      }
      // All the way right, then all the way down.
      optimal.probs(s, x < side - 1 ? 1 : 3) = 1.0;
    }
  }

  GridInstance out;
  out.mdp = std::move(mdp);
  out.target = mix_uniform(optimal, target_explore);
  out.behavior = mix_uniform(optimal, behavior_explore);
  out.mdp.validate();
  return out;
}

Eigen::MatrixXd policy_operator(const TabularMdp& mdp, const Policy& pi) {
  if (pi.probs.rows() != mdp.n_states || pi.probs.cols() != mdp.n_actions)
    throw std::invalid_argument("policy shape does not match MDP");
  const int n = mdp.num_pairs();
  Eigen::MatrixXd p(n, n);
  for (int sa = 0; sa < n; ++sa)
    for (int s2 = 0; s2 < mdp.n_states; ++s2)
      for (int a2 = 0; a2 < mdp.n_actions; ++a2)
        p(sa, mdp.pair_index(s2, a2)) = mdp.transition(sa, s2) * pi.probs(s2, a2);
  return p;
}

Eigen::VectorXd initial_distribution(const TabularMdp& mdp, const Policy& pi) {
  Eigen::VectorXd v(mdp.num_pairs());
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) v[mdp.pair_index(s, a)] = mdp.mu0[s] * pi.probs(s, a);
  return v;
}

Trajectory rollout(const TabularMdp& mdp, const Policy& pi, int horizon, std::uint64_t rng_seed) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  std::mt19937_64 rng(rng_seed);
  auto draw = [&rng](const Eigen::VectorXd& p) {
    std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
    return dist(rng);
  };

  Trajectory traj;
  traj.states.reserve(horizon);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  traj.next_states.reserve(horizon);

  int s = draw(mdp.mu0);
  traj.initial_state = s;
  for (int t = 0; t < horizon; ++t) {
    const int a = draw(pi.probs.row(s).transpose());
    const int s2 = draw(mdp.transition.row(mdp.pair_index(s, a)).transpose());
    traj.states.push_back(s);
    traj.actions.push_back(a);
    traj.rewards.push_back(mdp.reward(s, a));
    traj.next_states.push_back(s2);
    s = s2;
  }
  return traj;
}

Policy mix_uniform(const Policy& pi, double weight) {
  if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("mix weight must lie in [0, 1]");
  Policy out;
  const double u = weight / static_cast<double>(pi.probs.cols());
  out.probs = (1.0 - weight) * pi.probs;
  out.probs.array() += u;
  return out;
}

namespace {

using nlohmann::json;

}  // namespace

TabularMdp load_mdp_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open MDP file: " + path);
  json j;
  in >> j;

  TabularMdp mdp;
  mdp.n_states = j.at("n_states").get<int>();
  mdp.n_actions = j.at("n_actions").get<int>();
  mdp.gamma = j.at("gamma").get<double>();
  if (mdp.n_states < 1 || mdp.n_actions < 1)
    throw std::invalid_argument("MDP file " + path + ": invalid dimensions");

  mdp.transition = Eigen::MatrixXd::Zero(mdp.num_pairs(), mdp.n_states);
  const auto& t = j.at("transition");
  if (static_cast<int>(t.size()) != mdp.n_states)
    throw std::invalid_argument("MDP file " + path + ": transition outer size != n_states");
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        mdp.transition(mdp.pair_index(s, a), s2) = t.at(s).at(a).at(s2).get<double>();

  mdp.reward = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  const auto& r = j.at("reward");
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) mdp.reward(s, a) = r.at(s).at(a).get<double>();

  mdp.mu0 = Eigen::VectorXd::Zero(mdp.n_states);
  const auto& m = j.at("mu0");
  for (int s = 0; s < mdp.n_states; ++s) mdp.mu0[s] = m.at(s).get<double>();

  mdp.validate();
  return mdp;
}

void save_mdp_json(const TabularMdp& mdp, const std::string& path) {
  json t = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    json ts = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) {
      json row = json::array();
      for (int s2 = 0; s2 < mdp.n_states; ++s2) row.push_back(mdp.transition(mdp.pair_index(s, a), s2));
      ts.push_back(row);
    }
    t.push_back(ts);
  }
  json r = json::array();
  for (int s = 0; s < mdp.n_states; ++s) {
    json row = json::array();
    for (int a = 0; a < mdp.n_actions; ++a) row.push_back(mdp.reward(s, a));
    r.push_back(row);
  }
  json m = json::array();
  for (int s = 0; s < mdp.n_states; ++s) m.push_back(mdp.mu0[s]);

  json j = {{"n_states", mdp.n_states}, {"n_actions", mdp.n_actions},
            {"transition", t},          {"reward", r},
            {"mu0", m},                 {"gamma", mdp.gamma}};
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write MDP file: " + path);
  out << j.dump(2) << "\n";
}

Policy load_policy_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open policy file: " + path);
  json j;
  in >> j;
  const int n_states = static_cast<int>(j.size());
  if (n_states == 0) throw std::invalid_argument("policy file " + path + " is empty");
  const int n_actions = static_cast<int>(j.at(0).size());
  Policy pi;
  pi.probs = Eigen::MatrixXd::Zero(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    if (static_cast<int>(j.at(s).size()) != n_actions)
      throw std::invalid_argument("policy file " + path + ": ragged row " + std::to_string(s));
    for (int a = 0; a < n_actions; ++a) pi.probs(s, a) = j.at(s).at(a).get<double>();
  }
  pi.validate();
  return pi;
}

void save_policy_json(const Policy& pi, const std::string& path) {
  json j = json::array();
  for (int s = 0; s < pi.probs.rows(); ++s) {
    json row = json::array();
    for (int a = 0; a < pi.probs.cols(); ++a) row.push_back(pi.probs(s, a));
    j.push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write policy file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace dicelp
