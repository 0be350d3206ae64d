#pragma once

#include <Eigen/Dense>
#include <string>

#include "dicelp/data.hpp"
#include "dicelp/mdp.hpp"

namespace dicelp {

struct FeatureMap {
  Eigen::MatrixXd phi;  // (S*A) x k, rows are feature vectors

  void validate() const;
};

FeatureMap one_hot_features(int num_pairs);
FeatureMap load_features_json(const std::string& path);

struct LstdqMatrices {
  Eigen::MatrixXd xi;   // E_dD[phi (phi - gamma phi')^T]
  Eigen::VectorXd b_r;  // E_dD[R phi]
  Eigen::VectorXd b_0;  // (1-gamma) E_{mu0 pi}[phi]
};

LstdqMatrices lstdq_matrices(const TabularMdp& mdp, const Policy& pi, const FeatureMap& phi,
                             const Eigen::VectorXd& dD, double gamma);
LstdqMatrices lstdq_matrices(const OfflineDataset& dataset, const Policy& pi,
                             const FeatureMap& phi, double gamma);

enum class LstdqRoute { Primal, Dual };

// Both routes evaluate b_0^T Xi^{-1} b_r; the primal route solves for the
// Q-weights, the dual route for the correction weights. Throws RankDeficiency
// when cond(Xi) > 1e12.
double lstdq_estimate(const LstdqMatrices& m, LstdqRoute route);

}  // namespace dicelp
