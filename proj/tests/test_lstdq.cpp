#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "dicelp/exact.hpp"
#include "dicelp/lstdq.hpp"
#include "dicelp/optim.hpp"
#include "helpers.hpp"

using namespace dicelp;
using namespace dicelp::testing;

TEST_CASE("Xi reduces to the weighted Gram matrix at gamma = 0") {
  const TabularMdp mdp = designed3_mdp();
  const Policy pi = designed3_target();
  const Eigen::VectorXd dD = solve_d(mdp, designed3_behavior());
  const FeatureMap fm = one_hot_features(mdp.num_pairs());
  const LstdqMatrices m = lstdq_matrices(mdp, pi, fm, dD, 0.0);
  CHECK((m.xi - Eigen::MatrixXd(dD.asDiagonal())).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("single-state matrices in closed form") {
  const TabularMdp mdp = single_state_mdp(0.6, 0.5);
  const Policy pi{Eigen::MatrixXd::Ones(1, 1)};
  const LstdqMatrices m =
      lstdq_matrices(mdp, pi, one_hot_features(1), Eigen::VectorXd::Ones(1), mdp.gamma);
  CHECK(m.xi(0, 0) == doctest::Approx(0.5).epsilon(1e-12));  // 1 - gamma
  CHECK(m.b_r[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(m.b_0[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lstdq_estimate(m, LstdqRoute::Primal) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("chain matrices against a dense hand computation") {
  const TabularMdp mdp = chain2_mdp();
  const Policy pi = chain2_pi();
  const Eigen::VectorXd dD = Eigen::Vector2d(0.25, 0.75);
  const FeatureMap fm = one_hot_features(2);
  const LstdqMatrices m = lstdq_matrices(mdp, pi, fm, dD, mdp.gamma);
  // P^pi sends both pairs to pair 1, so Xi = diag(dD) - gamma dD e1^T
  Eigen::MatrixXd want(2, 2);
  want << 0.25, -0.5 * 0.25, 0.0, 0.75 - 0.5 * 0.75;
  CHECK((m.xi - want).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(m.b_r[0] == doctest::Approx(0.0));
  CHECK(m.b_r[1] == doctest::Approx(0.75));
  CHECK(m.b_0[0] == doctest::Approx(0.5));
  CHECK(m.b_0[1] == doctest::Approx(0.0));
}

TEST_CASE("one-hot features reproduce the exact value") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = random_mdp(5, 2, 0.9, 600 + seed);
    const Policy target = random_policy(5, 2, 700 + seed);
    const Eigen::VectorXd dD = solve_d(mdp, random_policy(5, 2, 800 + seed));
    const LstdqMatrices m =
        lstdq_matrices(mdp, target, one_hot_features(10), dD, mdp.gamma);
    const double rho = policy_value(mdp, target);
    CHECK(std::abs(lstdq_estimate(m, LstdqRoute::Primal) - rho) < 1e-8);
    CHECK(std::abs(lstdq_estimate(m, LstdqRoute::Dual) - rho) < 1e-8);
  }
}

TEST_CASE("primal and dual routes agree for arbitrary feature draws") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise;
  const TabularMdp mdp = designed3_mdp();
  const Policy target = designed3_target();
  const Eigen::VectorXd dD = solve_d(mdp, designed3_behavior());
  for (int draw = 0; draw < 50; ++draw) {
    FeatureMap fm;
    fm.phi.resize(mdp.num_pairs(), 3);
    for (int i = 0; i < fm.phi.rows(); ++i)
      for (int c = 0; c < 3; ++c) fm.phi(i, c) = noise(rng);
    const LstdqMatrices m = lstdq_matrices(mdp, target, fm, dD, mdp.gamma);
    const double primal = lstdq_estimate(m, LstdqRoute::Primal);
    const double dual = lstdq_estimate(m, LstdqRoute::Dual);
    CHECK(std::abs(primal - dual) < 1e-8);
  }
}

TEST_CASE("duplicated features raise RankDeficiency with the numeric rank") {
  const TabularMdp mdp = chain2_mdp();
  FeatureMap fm;
  fm.phi.resize(2, 2);
  fm.phi << 1.0, 1.0, 2.0, 2.0;  // two identical columns
  const LstdqMatrices m =
      lstdq_matrices(mdp, chain2_pi(), fm, Eigen::Vector2d(0.25, 0.75), mdp.gamma);
  try {
    lstdq_estimate(m, LstdqRoute::Primal);
    FAIL("expected RankDeficiency");
  } catch (const RankDeficiency& e) {
    CHECK(e.rank == 1);
  }
}

TEST_CASE("dataset matrices converge to the population matrices") {
  const GridInstance g = build_grid(3);
  const TabularMdp mdp = g.mdp;
  const OfflineDataset ds = collect(mdp, g.behavior, 300, 60, 12);
  const Eigen::VectorXd dD = empirical_dD(ds);
  FeatureMap fm;
  std::mt19937_64 rng(14);
  std::normal_distribution<double> noise;
  fm.phi.resize(mdp.num_pairs(), 4);
  for (int i = 0; i < fm.phi.rows(); ++i)
    for (int c = 0; c < 4; ++c) fm.phi(i, c) = noise(rng);

  const LstdqMatrices sample = lstdq_matrices(ds, g.target, fm, mdp.gamma);
  const LstdqMatrices pop = lstdq_matrices(mdp, g.target, fm, dD, mdp.gamma);
  // b_r is an exact function of the empirical dD; xi and b_0 carry transition
  // and initial-state sampling noise respectively
  CHECK((sample.b_r - pop.b_r).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((sample.xi - pop.xi).lpNorm<Eigen::Infinity>() < 0.1);
  CHECK((sample.b_0 - pop.b_0).lpNorm<Eigen::Infinity>() < 0.1);
}

TEST_CASE("linear saddle-point optimization matches LSTDQ") {
  const TabularMdp mdp = chain2_mdp();
  const Policy pi = chain2_pi();
  const Eigen::VectorXd dD = Eigen::Vector2d(0.25, 0.75);
  const double via_lstdq = lstdq_estimate(
      lstdq_matrices(mdp, pi, one_hot_features(2), dD, mdp.gamma), LstdqRoute::Primal);

  DiceConfig config;
  config.alpha_zeta = 1.0;
  config.alpha_r = 1;
  SgdaSettings settings;
  settings.lr_primal = settings.lr_dual = settings.lr_lambda = 0.05;
  settings.steps = 200000;
  const ExactProblem problem{mdp, pi, dD};
  const SgdaResult res =
      sgda(config, problem, Parametrization::linear(Eigen::MatrixXd::Identity(2, 2)), settings);
  // the combined estimator of the regularized saddle is unbiased, and with
  // one-hot features LSTDQ computes the same fixed point
  CHECK(std::abs(estimate_lagrangian(res.sol, problem) - via_lstdq) < 5e-3);
}

TEST_CASE("feature JSON round trip and error handling") {
  const std::string path = "test_features.json";
  {
    std::ofstream out(path);
    out << R"({"features": [[1.0, 0.0], [0.5, 2.0]]})";
  }
  const FeatureMap fm = load_features_json(path);
  REQUIRE(fm.phi.rows() == 2);
  REQUIRE(fm.phi.cols() == 2);
  CHECK(fm.phi(1, 0) == doctest::Approx(0.5));
  CHECK(fm.phi(1, 1) == doctest::Approx(2.0));

  {
    std::ofstream out(path);
    out << R"({"features": [[1.0, 0.0], [0.5]]})";  // ragged
  }
  CHECK_THROWS_AS(load_features_json(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << R"({"rows": []})";  // wrong key
  }
  CHECK_THROWS_AS(load_features_json(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "not json";
  }
  CHECK_THROWS_AS(load_features_json(path), std::invalid_argument);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_features_json("missing_features.json"), std::invalid_argument);
  CHECK_THROWS_AS(one_hot_features(0), std::invalid_argument);
}
