#include "dicelp/optim.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

namespace dicelp {

Parametrization Parametrization::linear(Eigen::MatrixXd phi) {
  Parametrization p;
  p.kind = Kind::Linear;
  p.features = std::move(phi);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.features);
  const double cutoff = 1e-10 * svd.singularValues().maxCoeff();
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > cutoff) ++rank;
  if (rank < p.features.cols())
    std::cerr << "warning: feature matrix is rank-deficient (rank " << rank << " < "
              << p.features.cols() << " columns)\n";
  return p;
}

void SgdaSettings::validate() const {
  if (lr_primal <= 0.0 || lr_dual <= 0.0 || lr_lambda <= 0.0)
    throw std::invalid_argument("step sizes must be positive");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

void save_trace_csv(const TrainingTrace& trace, double true_rho, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write trace file: " + path);
  out << "step,rho_q,rho_zeta,rho_lagrangian,objective,true_rho\n";
  out.precision(17);
  for (const TraceRecord& rec : trace.records)
    out << rec.step << "," << rec.rho_q << "," << rec.rho_zeta << "," << rec.rho_lagrangian << ","
        << rec.objective << "," << true_rho << "\n";
}

namespace {

constexpr double kDivergenceLimit = 1e8;

Eigen::MatrixXd feature_matrix(const Parametrization& param, int num_pairs) {
  if (param.kind == Parametrization::Kind::Tabular)
    return Eigen::MatrixXd::Identity(num_pairs, num_pairs);
  if (param.features.rows() != num_pairs)
    throw std::invalid_argument("feature matrix row count does not match S*A");
  return param.features;
}

Eigen::VectorXd positivity_init(const Eigen::MatrixXd& phi) {
  // zeta = (phi u)^2 has zero gradient at u = 0; start at zeta ~= 1 instead.
  return phi.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(phi.rows()));
}

Eigen::VectorXd elementwise(const std::function<double(double)>& fn, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return out;
}

long checkpoint_stride(long steps) { return std::max(steps / 200L, 1L); }

void check_divergence(double objective, const SgdaSettings& settings) {
  if (!std::isfinite(objective) || std::abs(objective) > kDivergenceLimit)
    throw Diverged("objective magnitude exceeded 1e8 (lr_primal=" +
                   std::to_string(settings.lr_primal) + ", lr_dual=" +
                   std::to_string(settings.lr_dual) + ", lr_lambda=" +
                   std::to_string(settings.lr_lambda) + ")");
}

struct DatasetEval {
  double rho_q = 0.0;
  double rho_zeta = 0.0;
  double rho_lagrangian = 0.0;
  double objective = 0.0;
};

DatasetEval dataset_eval(const DiceConfig& config, const OfflineDataset& dataset,
                         const Policy& pi, double gamma, const Solution& sol) {
  const int n_actions = dataset.n_actions;
  const double n = static_cast<double>(dataset.samples.size());
  double init_term = 0.0, dual_term = 0.0, corr_term = 0.0, f1_term = 0.0, f2_term = 0.0,
         obj_zeta_term = 0.0;
  for (const Sample& smp : dataset.samples) {
    double q0 = 0.0, qn = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      q0 += pi.probs(smp.s0, a) * sol.q[smp.s0 * n_actions + a];
      qn += pi.probs(smp.s_next, a) * sol.q[smp.s_next * n_actions + a];
    }
    const int sa = smp.s * n_actions + smp.a;
    init_term += q0;
    dual_term += sol.zeta[sa] * smp.r;
    corr_term += sol.zeta[sa] * (gamma * qn - sol.q[sa] - sol.lam);
    obj_zeta_term += sol.zeta[sa] * (config.alpha_r * smp.r + gamma * qn - sol.q[sa] - sol.lam);
    if (config.alpha_q > 0.0) f1_term += config.f1.f(sol.q[sa]);
    if (config.alpha_zeta > 0.0) f2_term += config.f2.f(sol.zeta[sa]);
  }
  DatasetEval ev;
  ev.rho_q = (1.0 - gamma) * init_term / n + sol.lam;
  ev.rho_zeta = dual_term / n;
  ev.rho_lagrangian = ev.rho_q + ev.rho_zeta + corr_term / n;
  ev.objective = (1.0 - gamma) * init_term / n + sol.lam + obj_zeta_term / n +
                 config.alpha_q * f1_term / n - config.alpha_zeta * f2_term / n;
  return ev;
}

// Shared SGDA loop. The gradient callback fills (gq, gz_or_gu, glam) in
// weight space for the current iterate.
struct SgdaState {
  Eigen::VectorXd wq;
  Eigen::VectorXd wz;  // raw dual parameters (u when positivity is on)
  double lam = 0.0;
};

}  // namespace

SgdaResult sgda(const DiceConfig& config, const ExactProblem& problem,
                const Parametrization& param, const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  const TabularMdp& mdp = problem.mdp;
  const int n = mdp.num_pairs();
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const int k = static_cast<int>(phi.cols());

  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::MatrixXd p_star = p.transpose();
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, problem.pi);
  const Eigen::VectorXd r = mdp.reward_vector();

  SgdaState st;
  st.wq = Eigen::VectorXd::Zero(k);
  st.wz = config.positivity ? positivity_init(phi) : Eigen::VectorXd::Zero(k);

  Eigen::VectorXd avg_q = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd avg_z = Eigen::VectorXd::Zero(n);
  double avg_lam = 0.0;
  long avg_count = 0;
  const long avg_start = settings.averaging ? settings.steps / 2 : settings.steps - 1;
  const long stride = checkpoint_stride(settings.steps);

  TrainingTrace trace;
  Solution cur;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd z_raw = phi * st.wz;
    cur.q = phi * st.wq;
    cur.zeta = config.positivity ? z_raw.cwiseProduct(z_raw) : z_raw;
    cur.lam = st.lam;

    if (step % stride == 0 || step == settings.steps - 1) {
      TraceRecord rec;
      rec.step = step;
      rec.rho_q = estimate_primal(cur, mdp, problem.pi);
      rec.rho_zeta = estimate_dual(cur, problem.dD, r);
      rec.rho_lagrangian = estimate_lagrangian(cur, problem);
      rec.objective = lagrangian_value(config, problem, cur);
      check_divergence(rec.objective, settings);
      trace.records.push_back(rec);
    }

    if (step >= avg_start) {
      avg_q += cur.q;
      avg_z += cur.zeta;
      avg_lam += cur.lam;
      ++avg_count;
    }

    // alternating updates: descend in Q with the current zeta, then ascend in
    // zeta against the refreshed Q (bounded orbits in the bilinear case,
    // unlike simultaneous updates)
    const Eigen::VectorXd dz = problem.dD.cwiseProduct(cur.zeta);
    Eigen::VectorXd gq = (1.0 - mdp.gamma) * mu0pi + mdp.gamma * (p_star * dz) - dz;
    if (config.alpha_q > 0.0)
      gq += config.alpha_q * problem.dD.cwiseProduct(elementwise(config.f1.f_prime, cur.q));
    st.wq -= settings.lr_primal * (phi.transpose() * gq);

    const Eigen::VectorXd q_new = phi * st.wq;
    Eigen::VectorXd gz =
        problem.dD.cwiseProduct(config.alpha_r * r + mdp.gamma * (p * q_new) - q_new -
                                Eigen::VectorXd::Constant(n, cur.lam));
    if (config.alpha_zeta > 0.0)
      gz -= config.alpha_zeta * problem.dD.cwiseProduct(elementwise(config.f2.f_prime, cur.zeta));
    if (config.positivity)
      st.wz += settings.lr_dual * (phi.transpose() * (2.0 * z_raw.cwiseProduct(gz)));
    else
      st.wz += settings.lr_dual * (phi.transpose() * gz);

    if (config.normalization) {
      const Eigen::VectorXd z_new = config.positivity
                                        ? Eigen::VectorXd((phi * st.wz).array().square())
                                        : Eigen::VectorXd(phi * st.wz);
      st.lam -= settings.lr_lambda * (1.0 - problem.dD.dot(z_new));
    }
  }

  SgdaResult out;
  out.trace = std::move(trace);
  out.sol.q = avg_q / static_cast<double>(avg_count);
  out.sol.zeta = avg_z / static_cast<double>(avg_count);
  out.sol.lam = avg_lam / static_cast<double>(avg_count);
  return out;
}

SgdaResult sgda(const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
                const TabularMdp& mdp, const Parametrization& param,
                const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");
  if (static_cast<std::size_t>(settings.batch_size) > dataset.samples.size())
    throw std::invalid_argument("batch size exceeds dataset size");

  const int n = mdp.num_pairs();
  const int n_actions = mdp.n_actions;
  const double gamma = mdp.gamma;
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const int k = static_cast<int>(phi.cols());

  std::mt19937_64 rng(settings.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.samples.size() - 1);

  SgdaState st;
  st.wq = Eigen::VectorXd::Zero(k);
  st.wz = config.positivity ? positivity_init(phi) : Eigen::VectorXd::Zero(k);

  Eigen::VectorXd avg_q = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd avg_z = Eigen::VectorXd::Zero(n);
  double avg_lam = 0.0;
  long avg_count = 0;
  const long avg_start = settings.averaging ? settings.steps / 2 : settings.steps - 1;
  const long stride = checkpoint_stride(settings.steps);
  const double inv_b = 1.0 / static_cast<double>(settings.batch_size);

  TrainingTrace trace;
  Solution cur;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd z_raw = phi * st.wz;
    cur.q = phi * st.wq;
    cur.zeta = config.positivity ? z_raw.cwiseProduct(z_raw) : z_raw;
    cur.lam = st.lam;

    if (step % stride == 0 || step == settings.steps - 1) {
      const DatasetEval ev = dataset_eval(config, dataset, pi, gamma, cur);
      TraceRecord rec{step, ev.rho_q, ev.rho_zeta, ev.rho_lagrangian, ev.objective};
      check_divergence(rec.objective, settings);
      trace.records.push_back(rec);
    }

    if (step >= avg_start) {
      avg_q += cur.q;
      avg_z += cur.zeta;
      avg_lam += cur.lam;
      ++avg_count;
    }

    std::vector<std::size_t> batch(settings.batch_size);
    for (int b = 0; b < settings.batch_size; ++b) batch[b] = pick(rng);

    // alternating updates over the same minibatch: Q first, then zeta
    // against the refreshed Q (bounded orbits in the bilinear case)
    Eigen::VectorXd gwq = Eigen::VectorXd::Zero(k);
    for (const std::size_t idx : batch) {
      const Sample& smp = dataset.samples[idx];
      const int sa = smp.s * n_actions + smp.a;
      for (int a = 0; a < n_actions; ++a) {
        gwq += (1.0 - gamma) * inv_b * pi.probs(smp.s0, a) *
               phi.row(smp.s0 * n_actions + a).transpose();
        gwq += gamma * inv_b * cur.zeta[sa] * pi.probs(smp.s_next, a) *
               phi.row(smp.s_next * n_actions + a).transpose();
      }
      gwq -= inv_b * cur.zeta[sa] * phi.row(sa).transpose();
      if (config.alpha_q > 0.0)
        gwq += config.alpha_q * inv_b * config.f1.f_prime(cur.q[sa]) * phi.row(sa).transpose();
    }
    st.wq -= settings.lr_primal * gwq;

    const Eigen::VectorXd q_new = phi * st.wq;
    Eigen::VectorXd gwz = Eigen::VectorXd::Zero(k);
    double zeta_mean = 0.0;
    for (const std::size_t idx : batch) {
      const Sample& smp = dataset.samples[idx];
      const int sa = smp.s * n_actions + smp.a;
      double qn = 0.0;
      for (int a = 0; a < n_actions; ++a)
        qn += pi.probs(smp.s_next, a) * q_new[smp.s_next * n_actions + a];
      double gz_sa = inv_b * (config.alpha_r * smp.r + gamma * qn - q_new[sa] - cur.lam);
      if (config.alpha_zeta > 0.0)
        gz_sa -= config.alpha_zeta * inv_b * config.f2.f_prime(cur.zeta[sa]);
      if (config.positivity)
        gwz += gz_sa * 2.0 * z_raw[sa] * phi.row(sa).transpose();
      else
        gwz += gz_sa * phi.row(sa).transpose();
      zeta_mean += inv_b * cur.zeta[sa];
    }
    st.wz += settings.lr_dual * gwz;
    if (config.normalization) st.lam -= settings.lr_lambda * (1.0 - zeta_mean);
  }

  SgdaResult out;
  out.trace = std::move(trace);
  out.sol.q = avg_q / static_cast<double>(avg_count);
  out.sol.zeta = avg_z / static_cast<double>(avg_count);
  out.sol.lam = avg_lam / static_cast<double>(avg_count);
  return out;
}

Eigen::VectorXd recover_zeta(const Eigen::VectorXd& q, const DiceConfig& config,
                             const TabularMdp& mdp, const Policy& pi) {
  if (config.alpha_zeta <= 0.0) throw UnsupportedConfig("recover_zeta requires alpha_zeta > 0");
  const Eigen::MatrixXd p = policy_operator(mdp, pi);
  const Eigen::VectorXd y =
      (config.alpha_r * mdp.reward_vector() + mdp.gamma * (p * q) - q) / config.alpha_zeta;
  return elementwise(config.f2.f_conj_prime, y);
}

PrimalFormResult unconstrained_primal(const DiceConfig& config, const ExactProblem& problem,
                                      const Parametrization& param,
                                      const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  if (config.alpha_zeta <= 0.0)
    throw UnsupportedConfig("unconstrained primal form requires alpha_zeta > 0");

  const TabularMdp& mdp = problem.mdp;
  const int n = mdp.num_pairs();
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, problem.pi);
  const Eigen::VectorXd r = mdp.reward_vector();
  const long stride = checkpoint_stride(settings.steps);

  Eigen::VectorXd wq = Eigen::VectorXd::Zero(phi.cols());
  TrainingTrace trace;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd q = phi * wq;
    const Eigen::VectorXd y = (config.alpha_r * r + mdp.gamma * (p * q) - q) / config.alpha_zeta;
    const Eigen::VectorXd fy = elementwise(config.f2.f_conj_prime, y);
    Eigen::VectorXd gq = (1.0 - mdp.gamma) * mu0pi +
                         mdp.gamma * (p.transpose() * problem.dD.cwiseProduct(fy)) -
                         problem.dD.cwiseProduct(fy);
    if (config.alpha_q > 0.0)
      gq += config.alpha_q * problem.dD.cwiseProduct(elementwise(config.f1.f_prime, q));

    if (step % stride == 0 || step == settings.steps - 1) {
      double obj = (1.0 - mdp.gamma) * mu0pi.dot(q) +
                   config.alpha_zeta * problem.dD.dot(elementwise(config.f2.f_conj, y));
      if (config.alpha_q > 0.0) obj += config.alpha_q * problem.dD.dot(elementwise(config.f1.f, q));
      check_divergence(obj, settings);
      Solution sol{q, recover_zeta(q, config, mdp, problem.pi), 0.0};
      TraceRecord rec{step, estimate_primal(sol, mdp, problem.pi),
                      estimate_dual(sol, problem.dD, r), estimate_lagrangian(sol, problem), obj};
      trace.records.push_back(rec);
    }
    wq -= settings.lr_primal * (phi.transpose() * gq);
  }

  PrimalFormResult out;
  out.q = phi * wq;
  out.trace = std::move(trace);
  out.exact_mode = true;
  return out;
}

PrimalFormResult unconstrained_primal(const DiceConfig& config, const OfflineDataset& dataset,
                                      const Policy& pi, const TabularMdp& mdp,
                                      const Parametrization& param,
                                      const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  if (config.alpha_zeta <= 0.0)
    throw UnsupportedConfig("unconstrained primal form requires alpha_zeta > 0");
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");

  const int n = mdp.num_pairs();
  const int n_actions = mdp.n_actions;
  const double gamma = mdp.gamma;
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const double inv_n = 1.0 / static_cast<double>(dataset.samples.size());
  const Eigen::VectorXd dD_hat = empirical_dD(dataset);
  const long stride = checkpoint_stride(settings.steps);

  Eigen::VectorXd wq = Eigen::VectorXd::Zero(phi.cols());
  TrainingTrace trace;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd q = phi * wq;
    Eigen::VectorXd gwq = Eigen::VectorXd::Zero(phi.cols());
    double obj = 0.0;
    for (const Sample& smp : dataset.samples) {
      const int sa = smp.s * n_actions + smp.a;
      double q0 = 0.0, qn = 0.0;
      for (int a = 0; a < n_actions; ++a) {
        q0 += pi.probs(smp.s0, a) * q[smp.s0 * n_actions + a];
        qn += pi.probs(smp.s_next, a) * q[smp.s_next * n_actions + a];
      }
      // conjugate applied per sample: s' stays inside f2*
      const double y = (config.alpha_r * smp.r + gamma * qn - q[sa]) / config.alpha_zeta;
      const double fy = config.f2.f_conj_prime(y);
      obj += inv_n * ((1.0 - gamma) * q0 + config.alpha_zeta * config.f2.f_conj(y));
      for (int a = 0; a < n_actions; ++a) {
        gwq += (1.0 - gamma) * inv_n * pi.probs(smp.s0, a) *
               phi.row(smp.s0 * n_actions + a).transpose();
        gwq += gamma * inv_n * fy * pi.probs(smp.s_next, a) *
               phi.row(smp.s_next * n_actions + a).transpose();
      }
      gwq -= inv_n * fy * phi.row(sa).transpose();
      if (config.alpha_q > 0.0) {
        obj += inv_n * config.alpha_q * config.f1.f(q[sa]);
        gwq += config.alpha_q * inv_n * config.f1.f_prime(q[sa]) * phi.row(sa).transpose();
      }
    }

    if (step % stride == 0 || step == settings.steps - 1) {
      check_divergence(obj, settings);
      Solution sol{q, recover_zeta(q, config, mdp, pi), 0.0};
      TraceRecord rec{step, estimate_primal(sol, mdp, pi),
                      estimate_dual(sol, dD_hat, mdp.reward_vector()),
                      estimate_lagrangian(sol, ExactProblem{mdp, pi, dD_hat}), obj};
      trace.records.push_back(rec);
    }
    wq -= settings.lr_primal * gwq;
  }

  PrimalFormResult out;
  out.q = phi * wq;
  out.trace = std::move(trace);
  out.exact_mode = false;
  return out;
}

namespace {

// Q recovered from the unconstrained dual stationarity relation.
Eigen::VectorXd dual_form_q(const DiceConfig& config, const TabularMdp& mdp, const Policy& pi,
                            const Eigen::VectorXd& dD, const Eigen::VectorXd& zeta,
                            const Eigen::MatrixXd& p_star) {
  const Eigen::VectorXd dz = dD.cwiseProduct(zeta);
  const Eigen::VectorXd g =
      (dz - mdp.gamma * (p_star * dz) - (1.0 - mdp.gamma) * initial_distribution(mdp, pi))
          .cwiseQuotient(config.alpha_q * dD);
  Eigen::VectorXd q(g.size());
  for (int i = 0; i < g.size(); ++i) q[i] = config.f1.f_conj_prime(g[i]);
  return q;
}

}  // namespace

DualFormResult unconstrained_dual(const DiceConfig& config, const ExactProblem& problem,
                                  const Parametrization& param, const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  if (config.alpha_q <= 0.0)
    throw UnsupportedConfig("unconstrained dual form requires alpha_q > 0");

  const TabularMdp& mdp = problem.mdp;
  const int n = mdp.num_pairs();
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::MatrixXd p_star = p.transpose();
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, problem.pi);
  const Eigen::VectorXd r = mdp.reward_vector();
  const long stride = checkpoint_stride(settings.steps);

  Eigen::VectorXd wz = Eigen::VectorXd::Zero(phi.cols());
  TrainingTrace trace;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd zeta = phi * wz;
    const Eigen::VectorXd dz = problem.dD.cwiseProduct(zeta);
    const Eigen::VectorXd g = (dz - mdp.gamma * (p_star * dz) - (1.0 - mdp.gamma) * mu0pi)
                                  .cwiseQuotient(config.alpha_q * problem.dD);
    const Eigen::VectorXd u = elementwise(config.f1.f_conj_prime, g);
    Eigen::VectorXd gz = config.alpha_r * problem.dD.cwiseProduct(r) -
                         problem.dD.cwiseProduct(u - mdp.gamma * (p * u));
    if (config.alpha_zeta > 0.0)
      gz -= config.alpha_zeta * problem.dD.cwiseProduct(elementwise(config.f2.f_prime, zeta));

    if (step % stride == 0 || step == settings.steps - 1) {
      double obj = config.alpha_r * problem.dD.dot(zeta.cwiseProduct(r)) -
                   config.alpha_q * problem.dD.dot(elementwise(config.f1.f_conj, g));
      if (config.alpha_zeta > 0.0)
        obj -= config.alpha_zeta * problem.dD.dot(elementwise(config.f2.f, zeta));
      check_divergence(obj, settings);
      Solution sol{dual_form_q(config, mdp, problem.pi, problem.dD, zeta, p_star), zeta, 0.0};
      TraceRecord rec{step, estimate_primal(sol, mdp, problem.pi),
                      estimate_dual(sol, problem.dD, r), estimate_lagrangian(sol, problem), obj};
      trace.records.push_back(rec);
    }
    wz += settings.lr_dual * (phi.transpose() * gz);
  }

  DualFormResult out;
  out.zeta = phi * wz;
  out.trace = std::move(trace);
  out.exact_mode = true;
  return out;
}

DualFormResult unconstrained_dual(const DiceConfig& config, const OfflineDataset& dataset,
                                  const Policy& pi, const TabularMdp& mdp,
                                  const Parametrization& param, const SgdaSettings& settings) {
  config.validate();
  settings.validate();
  if (config.alpha_q <= 0.0)
    throw UnsupportedConfig("unconstrained dual form requires alpha_q > 0");
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");

  const int n = mdp.num_pairs();
  const int n_actions = mdp.n_actions;
  const double gamma = mdp.gamma;
  const Eigen::MatrixXd phi = feature_matrix(param, n);
  const Eigen::VectorXd dD_hat = empirical_dD(dataset);
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, pi);
  const double inv_n = 1.0 / static_cast<double>(dataset.samples.size());
  const long stride = checkpoint_stride(settings.steps);

  // Exact next-pair state marginal m(s') = sum_{s,a} T(s'|s,a) dD(s,a),
  // used to importance-weight samples back to dD.
  Eigen::VectorXd m_next = Eigen::VectorXd::Zero(mdp.n_states);
  for (int sa = 0; sa < n; ++sa)
    for (int s2 = 0; s2 < mdp.n_states; ++s2) m_next[s2] += mdp.transition(sa, s2) * dD_hat[sa];

  const Eigen::MatrixXd p_star = policy_operator(mdp, pi).transpose();
  const Eigen::VectorXd r = mdp.reward_vector();

  Eigen::VectorXd wz = Eigen::VectorXd::Zero(phi.cols());
  TrainingTrace trace;
  for (long step = 0; step < settings.steps; ++step) {
    const Eigen::VectorXd zeta = phi * wz;
    Eigen::VectorXd gwz = Eigen::VectorXd::Zero(phi.cols());
    double obj = 0.0;
    for (const Sample& smp : dataset.samples) {
      const int sa = smp.s * n_actions + smp.a;
      obj += inv_n * config.alpha_r * zeta[sa] * smp.r;
      gwz += inv_n * config.alpha_r * smp.r * phi.row(sa).transpose();
      if (config.alpha_zeta > 0.0) {
        obj -= inv_n * config.alpha_zeta * config.f2.f(zeta[sa]);
        gwz -= inv_n * config.alpha_zeta * config.f2.f_prime(zeta[sa]) * phi.row(sa).transpose();
      }
      // per-sample conjugate: the backward mean of zeta is replaced by the
      // single sampled predecessor (the bias source under branching dynamics)
      const int sn = smp.s_next;
      if (m_next[sn] <= 0.0) continue;
      for (int a = 0; a < n_actions; ++a) {
        const int sna = sn * n_actions + a;
        if (dD_hat[sna] <= 0.0) continue;
        const double w = dD_hat[sna] / m_next[sn];
        const double pia = pi.probs(sn, a);
        const double ghat = (dD_hat[sna] * zeta[sna] - (1.0 - gamma) * mu0pi[sna] -
                             gamma * pia * m_next[sn] * zeta[sa]) /
                            (config.alpha_q * dD_hat[sna]);
        obj -= inv_n * pia * w * config.alpha_q * config.f1.f_conj(ghat);
        const double fg = config.f1.f_conj_prime(ghat);
        gwz -= inv_n * pia * w * fg * phi.row(sna).transpose();
        gwz += inv_n * pia * w * fg * gamma * pia * m_next[sn] / dD_hat[sna] *
               phi.row(sa).transpose();
      }
    }

    if (step % stride == 0 || step == settings.steps - 1) {
      check_divergence(obj, settings);
      Solution sol{dual_form_q(config, mdp, pi, dD_hat, zeta, p_star), zeta, 0.0};
      TraceRecord rec{step, estimate_primal(sol, mdp, pi), estimate_dual(sol, dD_hat, r),
                      estimate_lagrangian(sol, ExactProblem{mdp, pi, dD_hat}), obj};
      trace.records.push_back(rec);
    }
    wz += settings.lr_dual * gwz;
  }

  DualFormResult out;
  out.zeta = phi * wz;
  out.trace = std::move(trace);
  out.exact_mode = false;
  return out;
}

}  // namespace dicelp
