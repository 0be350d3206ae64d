#include "dicelp/data.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace dicelp {

OfflineDataset collect(const TabularMdp& mdp, const Policy& behavior, int n_trajectories,
                       int horizon, std::uint64_t rng_seed) {
  if (n_trajectories < 1 || horizon < 1)
    throw std::invalid_argument("collect requires n_trajectories >= 1 and horizon >= 1");

  std::mt19937_64 rng(rng_seed);
  auto draw = [&rng](const Eigen::VectorXd& p) {
    std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
    return dist(rng);
  };

  OfflineDataset ds;
  ds.n_states = mdp.n_states;
  ds.n_actions = mdp.n_actions;
  ds.counts_sa = Eigen::VectorXd::Zero(mdp.num_pairs());
  ds.samples.reserve(static_cast<std::size_t>(n_trajectories) * horizon);

  for (int i = 0; i < n_trajectories; ++i) {
    int s = draw(mdp.mu0);
    for (int t = 0; t < horizon; ++t) {
      const int a = draw(behavior.probs.row(s).transpose());
      const int s2 = draw(mdp.transition.row(mdp.pair_index(s, a)).transpose());
      Sample smp;
      smp.s0 = draw(mdp.mu0);  // independent initial draw per sample
      smp.s = s;
      smp.a = a;
      smp.r = mdp.reward(s, a);
      smp.s_next = s2;
      ds.counts_sa[mdp.pair_index(s, a)] += 1.0;
      ds.samples.push_back(smp);
      s = s2;
    }
  }
  return ds;
}

Eigen::VectorXd empirical_dD(const OfflineDataset& dataset) {
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");
  return dataset.counts_sa / static_cast<double>(dataset.samples.size());
}

RatioBound ratio_bound(const Eigen::VectorXd& dD, const Eigen::VectorXd& d_pi) {
  if (dD.size() != d_pi.size()) throw std::invalid_argument("distribution sizes differ");
  RatioBound out;
  for (int i = 0; i < dD.size(); ++i) {
    if (d_pi[i] <= 0.0) continue;
    if (dD[i] <= 0.0) {
      out.bounded = false;
      out.c = std::numeric_limits<double>::infinity();
      return out;
    }
    out.c = std::max(out.c, d_pi[i] / dD[i]);
  }
  return out;
}

void save_dataset_csv(const OfflineDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write dataset file: " + path);
  out << "s0,s,a,r,s_next\n";
  out.precision(17);
  for (const Sample& smp : dataset.samples)
    out << smp.s0 << "," << smp.s << "," << smp.a << "," << smp.r << "," << smp.s_next << "\n";
}

OfflineDataset load_dataset_csv(const std::string& path, const TabularMdp* mdp) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "s0,s,a,r,s_next")
    throw std::invalid_argument("dataset file " + path + ": bad header");

  OfflineDataset ds;
  int max_s = -1, max_a = -1;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    Sample smp;
    char c1, c2, c3, c4;
    if (!(ss >> smp.s0 >> c1 >> smp.s >> c2 >> smp.a >> c3 >> smp.r >> c4 >> smp.s_next) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::invalid_argument("dataset file " + path + ": parse error at row " +
                                  std::to_string(row));
    if (mdp) {
      if (smp.s0 < 0 || smp.s0 >= mdp->n_states || smp.s < 0 || smp.s >= mdp->n_states ||
          smp.s_next < 0 || smp.s_next >= mdp->n_states || smp.a < 0 || smp.a >= mdp->n_actions)
        throw std::invalid_argument("dataset file " + path + ": index out of range at row " +
                                    std::to_string(row));
      if (std::abs(smp.r - mdp->reward(smp.s, smp.a)) > 1e-9)
        throw std::invalid_argument("dataset file " + path + ": reward mismatch at row " +
                                    std::to_string(row) + " field r");
    }
    max_s = std::max({max_s, smp.s0, smp.s, smp.s_next});
    max_a = std::max(max_a, smp.a);
    ds.samples.push_back(smp);
  }
  if (ds.samples.empty()) throw std::invalid_argument("dataset file " + path + " has no samples");

  ds.n_states = mdp ? mdp->n_states : max_s + 1;
  ds.n_actions = mdp ? mdp->n_actions : max_a + 1;
  ds.counts_sa = Eigen::VectorXd::Zero(ds.n_states * ds.n_actions);
  for (const Sample& smp : ds.samples) ds.counts_sa[smp.s * ds.n_actions + smp.a] += 1.0;
  return ds;
}

}  // namespace dicelp
