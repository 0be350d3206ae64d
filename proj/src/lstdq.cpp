#include "dicelp/lstdq.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "dicelp/errors.hpp"

namespace dicelp {

void FeatureMap::validate() const {
  if (phi.rows() < 1 || phi.cols() < 1)
    throw std::invalid_argument("feature map must be non-empty");
  if (!phi.allFinite()) throw std::invalid_argument("feature map has non-finite entries");
}

FeatureMap one_hot_features(int num_pairs) {
  if (num_pairs < 1) throw std::invalid_argument("num_pairs must be >= 1");
  return FeatureMap{Eigen::MatrixXd::Identity(num_pairs, num_pairs)};
}

FeatureMap load_features_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open feature file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("feature file " + path + ": " + e.what());
  }
  if (!j.contains("features") || !j["features"].is_array())
    throw std::invalid_argument("feature file " + path + ": missing \"features\" array");
  const auto& rows = j["features"];
  if (rows.empty() || !rows[0].is_array())
    throw std::invalid_argument("feature file " + path + ": \"features\" must be a 2-d array");
  const std::size_t k = rows[0].size();
  FeatureMap fm;
  fm.phi.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != k)
      throw std::invalid_argument("feature file " + path + ": ragged row " + std::to_string(i));
    for (std::size_t c = 0; c < k; ++c)
      fm.phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          rows[i][c].get<double>();
  }
  fm.validate();
  return fm;
}

namespace {

// phi'(s, a) marginalized over a ~ pi(s): row sa of E[phi_next].
Eigen::MatrixXd next_features(const TabularMdp& mdp, const Policy& pi, const FeatureMap& fm) {
  return policy_operator(mdp, pi) * fm.phi;
}

}  // namespace

LstdqMatrices lstdq_matrices(const TabularMdp& mdp, const Policy& pi, const FeatureMap& fm,
                             const Eigen::VectorXd& dD, double gamma) {
  fm.validate();
  if (fm.phi.rows() != mdp.num_pairs())
    throw std::invalid_argument("feature rows do not match S*A");
  if (dD.size() != mdp.num_pairs())
    throw std::invalid_argument("dD size does not match S*A");
  const Eigen::MatrixXd phi_next = next_features(mdp, pi, fm);
  LstdqMatrices m;
  m.xi = fm.phi.transpose() * dD.asDiagonal() * (fm.phi - gamma * phi_next);
  m.b_r = fm.phi.transpose() * dD.cwiseProduct(mdp.reward_vector());
  m.b_0 = (1.0 - gamma) * fm.phi.transpose() * initial_distribution(mdp, pi);
  return m;
}

LstdqMatrices lstdq_matrices(const OfflineDataset& dataset, const Policy& pi,
                             const FeatureMap& fm, double gamma) {
  fm.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");
  const int n_actions = dataset.n_actions;
  if (fm.phi.rows() != static_cast<Eigen::Index>(dataset.n_states) * n_actions)
    throw std::invalid_argument("feature rows do not match S*A");
  const int k = static_cast<int>(fm.phi.cols());
  const double inv_n = 1.0 / static_cast<double>(dataset.samples.size());

  LstdqMatrices m;
  m.xi = Eigen::MatrixXd::Zero(k, k);
  m.b_r = Eigen::VectorXd::Zero(k);
  m.b_0 = Eigen::VectorXd::Zero(k);
  for (const Sample& smp : dataset.samples) {
    const int sa = smp.s * n_actions + smp.a;
    Eigen::VectorXd phi_next = Eigen::VectorXd::Zero(k);
    for (int a = 0; a < n_actions; ++a) {
      phi_next += pi.probs(smp.s_next, a) * fm.phi.row(smp.s_next * n_actions + a).transpose();
      m.b_0 += (1.0 - gamma) * inv_n * pi.probs(smp.s0, a) *
               fm.phi.row(smp.s0 * n_actions + a).transpose();
    }
    m.xi += inv_n * fm.phi.row(sa).transpose() *
            (fm.phi.row(sa) - gamma * phi_next.transpose());
    m.b_r += inv_n * smp.r * fm.phi.row(sa).transpose();
  }
  return m;
}

double lstdq_estimate(const LstdqMatrices& m, LstdqRoute route) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0 || smax / smin > 1e12) {
    int rank = 0;
    const double cutoff = 1e-12 * smax;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > cutoff) ++rank;
    throw RankDeficiency("Xi is ill-conditioned (cond > 1e12)", rank);
  }
  if (route == LstdqRoute::Primal) {
    // Q-weights: Xi w = b_r, estimate b_0^T w
    const Eigen::VectorXd w = svd.solve(m.b_r);
    return m.b_0.dot(w);
  }
  // correction weights: Xi^T v = b_0, estimate v^T b_r
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_t(m.xi.transpose(),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd v = svd_t.solve(m.b_0);
  return v.dot(m.b_r);
}

}  // namespace dicelp
