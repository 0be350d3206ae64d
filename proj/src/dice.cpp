#include "dicelp/dice.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dicelp {

void DiceConfig::validate() const {
  if (alpha_q < 0.0 || alpha_zeta < 0.0)
    throw std::invalid_argument("regularization weights must be nonnegative");
  if (alpha_r != 0 && alpha_r != 1) throw std::invalid_argument("alpha_r must be 0 or 1");
}

std::string DiceConfig::describe() const {
  std::ostringstream os;
  os << "aQ=" << alpha_q << ";aZ=" << alpha_zeta << ";aR=" << alpha_r
     << ";pos=" << (positivity ? 1 : 0) << ";lam=" << (normalization ? 1 : 0);
  return os.str();
}

DiceConfig named_config(const std::string& name) {
  DiceConfig c;
  if (name == "DualDICE") {
    c.alpha_q = 0.0; c.alpha_zeta = 1.0; c.alpha_r = 0;
    c.positivity = false; c.normalization = false;
  } else if (name == "GenDICE") {
    c.alpha_q = 1.0; c.alpha_zeta = 0.0; c.alpha_r = 0;
    c.positivity = true; c.normalization = true;
  } else if (name == "GradientDICE") {
    c.alpha_q = 1.0; c.alpha_zeta = 0.0; c.alpha_r = 0;
    c.positivity = false; c.normalization = true;
  } else if (name == "MWL") {
    c.alpha_q = 0.0; c.alpha_zeta = 0.0; c.alpha_r = 0;
    c.positivity = false; c.normalization = false;
  } else if (name == "DR-MWQL") {
    c.alpha_q = 0.0; c.alpha_zeta = 0.0; c.alpha_r = 1;
    c.positivity = false; c.normalization = false;
  } else if (name == "AlgaeQ") {
    c.alpha_q = 0.0; c.alpha_zeta = 1.0; c.alpha_r = 1;
    c.positivity = true; c.normalization = false;
  } else if (name == "BestDICE") {
    c.alpha_q = 0.0; c.alpha_zeta = 1.0; c.alpha_r = 1;
    c.positivity = true; c.normalization = true;
  } else {
    throw UnsupportedConfig("unknown estimator name: " + name);
  }
  return c;
}

std::string config_to_json(const DiceConfig& config) {
  nlohmann::json j = {{"alpha_q", config.alpha_q},
                      {"alpha_zeta", config.alpha_zeta},
                      {"alpha_r", config.alpha_r},
                      {"positivity", config.positivity},
                      {"normalization", config.normalization},
                      {"f1", config.f1.name},
                      {"f2", config.f2.name}};
  return j.dump(2);
}

DiceConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.contains("name")) return named_config(j.at("name").get<std::string>());
  DiceConfig c;
  c.alpha_q = j.at("alpha_q").get<double>();
  c.alpha_zeta = j.at("alpha_zeta").get<double>();
  c.alpha_r = j.at("alpha_r").get<int>();
  c.positivity = j.at("positivity").get<bool>();
  c.normalization = j.at("normalization").get<bool>();
  if (j.contains("f1")) c.f1 = convex_fn_by_name(j.at("f1").get<std::string>());
  if (j.contains("f2")) c.f2 = convex_fn_by_name(j.at("f2").get<std::string>());
  c.validate();
  return c;
}

namespace {

void check_positivity(const DiceConfig& config, const Solution& sol) {
  if (config.positivity && (sol.zeta.array() < -1e-12).any())
    throw std::invalid_argument("positivity flag set but zeta has negative entries");
}

Eigen::VectorXd elementwise(const std::function<double(double)>& fn, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return out;
}

}  // namespace

double lagrangian_value(const DiceConfig& config, const ExactProblem& problem,
                        const Solution& sol) {
  config.validate();
  check_positivity(config, sol);
  const TabularMdp& mdp = problem.mdp;
  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, problem.pi);
  const Eigen::VectorXd r = mdp.reward_vector();

  const Eigen::VectorXd bellman =
      config.alpha_r * r + mdp.gamma * (p * sol.q) - sol.q -
      Eigen::VectorXd::Constant(sol.q.size(), sol.lam);

  double value = (1.0 - mdp.gamma) * mu0pi.dot(sol.q) + sol.lam +
                 problem.dD.dot(sol.zeta.cwiseProduct(bellman));
  if (config.alpha_q > 0.0) value += config.alpha_q * problem.dD.dot(elementwise(config.f1.f, sol.q));
  if (config.alpha_zeta > 0.0)
    value -= config.alpha_zeta * problem.dD.dot(elementwise(config.f2.f, sol.zeta));
  return value;
}

double lagrangian_value(const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
                        double gamma, const Solution& sol) {
  config.validate();
  check_positivity(config, sol);
  if (dataset.samples.empty()) throw std::invalid_argument("empty dataset");
  const int n_actions = dataset.n_actions;
  const double n = static_cast<double>(dataset.samples.size());

  double init_term = 0.0, zeta_term = 0.0, f1_term = 0.0, f2_term = 0.0;
  for (const Sample& smp : dataset.samples) {
    double q0 = 0.0, qn = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      q0 += pi.probs(smp.s0, a) * sol.q[smp.s0 * n_actions + a];
      qn += pi.probs(smp.s_next, a) * sol.q[smp.s_next * n_actions + a];
    }
    const int sa = smp.s * n_actions + smp.a;
    init_term += q0;
    zeta_term += sol.zeta[sa] * (config.alpha_r * smp.r + gamma * qn - sol.q[sa] - sol.lam);
    if (config.alpha_q > 0.0) f1_term += config.f1.f(sol.q[sa]);
    if (config.alpha_zeta > 0.0) f2_term += config.f2.f(sol.zeta[sa]);
  }
  return (1.0 - gamma) * init_term / n + sol.lam + zeta_term / n +
         config.alpha_q * f1_term / n - config.alpha_zeta * f2_term / n;
}

LagrangianGradients lagrangian_gradients(const DiceConfig& config, const ExactProblem& problem,
                                         const Solution& sol) {
  const TabularMdp& mdp = problem.mdp;
  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, problem.pi);
  const Eigen::VectorXd r = mdp.reward_vector();

  const Eigen::VectorXd dz = problem.dD.cwiseProduct(sol.zeta);
  LagrangianGradients g;
  g.wrt_q = (1.0 - mdp.gamma) * mu0pi + mdp.gamma * (p.transpose() * dz) - dz;
  if (config.alpha_q > 0.0)
    g.wrt_q += config.alpha_q * problem.dD.cwiseProduct(elementwise(config.f1.f_prime, sol.q));

  const Eigen::VectorXd bellman =
      config.alpha_r * r + mdp.gamma * (p * sol.q) - sol.q -
      Eigen::VectorXd::Constant(sol.q.size(), sol.lam);
  g.wrt_zeta = problem.dD.cwiseProduct(bellman);
  if (config.alpha_zeta > 0.0)
    g.wrt_zeta -= config.alpha_zeta * problem.dD.cwiseProduct(elementwise(config.f2.f_prime, sol.zeta));

  g.wrt_lambda = config.normalization ? 1.0 - problem.dD.dot(sol.zeta) : 0.0;
  return g;
}

double estimate_primal(const Solution& sol, const TabularMdp& mdp, const Policy& pi) {
  return (1.0 - mdp.gamma) * initial_distribution(mdp, pi).dot(sol.q) + sol.lam;
}

double estimate_dual(const Solution& sol, const Eigen::VectorXd& dD,
                     const Eigen::VectorXd& reward) {
  return dD.dot(sol.zeta.cwiseProduct(reward));
}

double estimate_lagrangian(const Solution& sol, const ExactProblem& problem) {
  const TabularMdp& mdp = problem.mdp;
  const Eigen::MatrixXd p = policy_operator(mdp, problem.pi);
  const Eigen::VectorXd correction =
      mdp.gamma * (p * sol.q) - sol.q - Eigen::VectorXd::Constant(sol.q.size(), sol.lam);
  return estimate_primal(sol, mdp, problem.pi) +
         estimate_dual(sol, problem.dD, mdp.reward_vector()) +
         problem.dD.dot(sol.zeta.cwiseProduct(correction));
}

EstimateTriple estimate_all(const Solution& sol, const ExactProblem& problem) {
  EstimateTriple t;
  t.rho_q = estimate_primal(sol, problem.mdp, problem.pi);
  t.rho_zeta = estimate_dual(sol, problem.dD, problem.mdp.reward_vector());
  t.rho_lagrangian = estimate_lagrangian(sol, problem);
  return t;
}

ClosedFormResult closed_form_solution(const DiceConfig& config, const TabularMdp& mdp,
                                      const Policy& pi, const Eigen::VectorXd& dD) {
  config.validate();
  if (config.alpha_q > 0.0 && config.alpha_zeta > 0.0)
    throw UnsupportedConfig("closed-form oracles cover one-sided regularization only");

  const int n = mdp.num_pairs();
  const Eigen::MatrixXd p = policy_operator(mdp, pi);
  const Eigen::MatrixXd i_minus_gp = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p;
  const Eigen::MatrixXd i_minus_gp_star =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p.transpose();
  const Eigen::VectorXd r = mdp.reward_vector();
  const Eigen::VectorXd mu0pi = initial_distribution(mdp, pi);
  const Eigen::VectorXd q_pi = solve_q(mdp, pi);
  const Eigen::VectorXd d_pi = solve_d(mdp, pi);

  for (int i = 0; i < n; ++i)
    if (d_pi[i] > 0.0 && dD[i] <= 0.0)
      throw AssumptionViolation("coverage assumption violated: dD lacks support where d^pi > 0");
  const Eigen::VectorXd ratio = d_pi.cwiseQuotient(dD);

  ClosedFormResult out;
  out.sol.lam = 0.0;

  ExactProblem problem{mdp, pi, dD};

  if (config.alpha_q == 0.0 && config.alpha_zeta == 0.0) {
    out.sol.q = q_pi;
    out.sol.zeta = ratio;
    out.saddle_value = lagrangian_value(config, problem, out.sol);
    return out;
  }

  if (config.alpha_q > 0.0) {
    if (config.alpha_r == 1) {
      if (config.normalization)
        throw BiasedConfig(
            "normalization with (alpha_q > 0, alpha_r = 1) makes the saddle biased; no oracle");
      if (!config.positivity) {
        // case i
        out.sol.q = q_pi;
        const Eigen::VectorXd extra = i_minus_gp_star.partialPivLu().solve(
            dD.cwiseProduct(elementwise(config.f1.f_prime, q_pi)));
        out.sol.zeta = ratio + config.alpha_q * extra.cwiseQuotient(dD);
        out.saddle_value = (1.0 - mdp.gamma) * mu0pi.dot(q_pi) +
                           config.alpha_q * dD.dot(elementwise(config.f1.f, q_pi));
      } else {
        // case ii: positive-part formulas, adjoint operator for zeta
        const Eigen::VectorXd inner =
            (config.alpha_q * elementwise(config.f1.f_prime, q_pi) +
             (1.0 - mdp.gamma) * mu0pi.cwiseQuotient(dD))
                .cwiseMax(0.0);
        const Eigen::VectorXd dz = i_minus_gp_star.partialPivLu().solve(dD.cwiseProduct(inner));
        out.sol.zeta = dz.cwiseQuotient(dD);
        out.sol.q = elementwise(config.f1.f_conj_prime,
                          (inner - (1.0 - mdp.gamma) * mu0pi.cwiseQuotient(dD)) / config.alpha_q);
        out.saddle_value = lagrangian_value(config, problem, out.sol);
      }
    } else {
      // cases iii-iv
      out.sol.q = Eigen::VectorXd::Constant(n, config.f1.f_conj_prime(0.0));
      out.sol.zeta = ratio;
      out.saddle_value = -config.alpha_q * config.f1.f_conj(0.0);
    }
    return out;
  }

  // cases v-viii (alpha_zeta > 0)
  out.sol.zeta = ratio;
  const Eigen::VectorXd nu = config.alpha_zeta * elementwise(config.f2.f_prime, ratio);
  out.sol.q = i_minus_gp.partialPivLu().solve(config.alpha_r * r - nu);
  const double div = dD.dot(elementwise(config.f2.f, ratio));  // D_f(d^pi || dD)
  out.saddle_value = config.alpha_r * d_pi.dot(r) - config.alpha_zeta * div;
  return out;
}

const char* to_string(Bias b) { return b == Bias::Unbiased ? "unbiased" : "biased"; }

BiasProfile unbiasedness_table(const DiceConfig& config) {
  config.validate();
  BiasProfile profile;
  if (config.alpha_q == 0.0 && config.alpha_zeta == 0.0) {
    profile.primal = profile.dual = profile.lagrangian = Bias::Unbiased;
    return profile;
  }
  if (config.alpha_q > 0.0 && config.alpha_zeta > 0.0)
    throw UnsupportedConfig("profiling covers one-sided regularization only");

  if (config.alpha_q > 0.0) {
    profile.primal =
        (config.alpha_r == 1 && !config.positivity) ? Bias::Unbiased : Bias::Biased;
    profile.dual = (config.alpha_r == 0) ? Bias::Unbiased : Bias::Biased;
  } else {
    profile.primal = Bias::Biased;
    profile.dual = Bias::Unbiased;
  }
  profile.lagrangian = (profile.primal == Bias::Unbiased || profile.dual == Bias::Unbiased)
                           ? Bias::Unbiased
                           : Bias::Biased;
  return profile;
}

}  // namespace dicelp
