#include "dicelp/sweep.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include "dicelp/errors.hpp"

namespace dicelp {

int SweepReport::mismatches() const {
  int n = 0;
  for (const SweepRow& row : rows)
    if (row.expected != row.observed) ++n;
  return n;
}

SweepReport run_sweep(const TabularMdp& mdp, const Policy& target, const Eigen::VectorXd& dD,
                      double tolerance) {
  if (tolerance <= 0.0) throw std::invalid_argument("tolerance must be positive");
  const Eigen::VectorXd r = mdp.reward_vector();
  if (r.maxCoeff() - r.minCoeff() < 1e-12)
    throw AssumptionViolation(
        "degenerate sweep input: constant reward cannot witness estimator bias");
  if ((dD - solve_d(mdp, target)).lpNorm<Eigen::Infinity>() < 1e-12)
    throw AssumptionViolation(
        "degenerate sweep input: dD equals the target visitation, every ratio is 1");

  const double true_rho = policy_value(mdp, target);
  const ExactProblem problem{mdp, target, dD};

  std::vector<DiceConfig> configs;
  for (double aq : {1.0, 0.0}) {
    const double az = aq > 0.0 ? 0.0 : 1.0;
    for (int ar : {1, 0})
      for (bool pos : {false, true}) {
        DiceConfig c;
        c.alpha_q = aq;
        c.alpha_zeta = az;
        c.alpha_r = ar;
        c.positivity = pos;
        configs.push_back(c);
      }
  }

  SweepReport report;
  report.tolerance = tolerance;
  auto emit = [&](const std::string& name, const DiceConfig& config) {
    const ClosedFormResult cf = closed_form_solution(config, mdp, target, dD);
    const EstimateTriple est = estimate_all(cf.sol, problem);
    const BiasProfile expected = unbiasedness_table(config);
    const std::pair<const char*, double> items[] = {{"rho_q", est.rho_q},
                                                    {"rho_zeta", est.rho_zeta},
                                                    {"rho_lagrangian", est.rho_lagrangian}};
    const Bias expected_by[] = {expected.primal, expected.dual, expected.lagrangian};
    for (int i = 0; i < 3; ++i) {
      SweepRow row;
      row.config = name;
      row.estimator = items[i].first;
      row.estimate = items[i].second;
      row.true_rho = true_rho;
      row.abs_error = std::abs(items[i].second - true_rho);
      row.expected = expected_by[i];
      row.observed = row.abs_error < tolerance ? Bias::Unbiased : Bias::Biased;
      report.rows.push_back(row);
    }
  };

  for (const DiceConfig& config : configs) emit(config.describe(), config);
  emit("none", DiceConfig{});  // unregularized baseline
  return report;
}

void save_sweep_csv(const SweepReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write sweep file: " + path);
  out << "config,estimator,estimate,true_rho,abs_error,expected,observed\n";
  out.precision(17);
  for (const SweepRow& row : report.rows)
    out << row.config << "," << row.estimator << "," << row.estimate << "," << row.true_rho
        << "," << row.abs_error << "," << to_string(row.expected) << ","
        << to_string(row.observed) << "\n";
}

namespace {

struct Transform {
  std::string name;
  std::function<double(double)> forward;
  std::function<double(double, double)> back;  // (estimate, gamma) -> original scale
  bool invertible = true;
};

Transform parse_transform(const std::string& spec) {
  Transform t;
  t.name = spec;
  if (spec == "exp") {
    t.forward = [](double r) { return std::exp(r); };
    t.back = [](double v, double) { return v; };
    t.invertible = false;
    return t;
  }
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    double arg = 0.0;
    try {
      std::size_t used = 0;
      arg = std::stod(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad transform argument in: " + spec);
    }
    if (kind == "scale") {
      if (arg == 0.0) throw std::invalid_argument("scale transform requires nonzero factor");
      t.forward = [arg](double r) { return arg * r; };
      t.back = [arg](double v, double) { return v / arg; };
      return t;
    }
    if (kind == "shift") {
      t.forward = [arg](double r) { return r + arg; };
      // rho is (1-gamma)-normalized, so a reward shift b moves it by exactly b
      t.back = [arg](double v, double) { return v - arg; };
      return t;
    }
  }
  throw std::invalid_argument("unknown transform: " + spec +
                              " (expected scale:<c>, shift:<b>, or exp)");
}

}  // namespace

RobustnessRow run_robustness(const TabularMdp& mdp, const Policy& target,
                             const Eigen::VectorXd& dD, const std::string& transform) {
  const Transform t = parse_transform(transform);

  TabularMdp tmdp = mdp;
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) tmdp.reward(s, a) = t.forward(mdp.reward(s, a));

  DiceConfig config;
  config.alpha_q = 0.0;
  config.alpha_zeta = 1.0;
  config.alpha_r = 1;

  const ClosedFormResult cf = closed_form_solution(config, tmdp, target, dD);
  const ExactProblem problem{tmdp, target, dD};
  const EstimateTriple est = estimate_all(cf.sol, problem);

  RobustnessRow row;
  row.transform = t.name;
  // for the non-invertible transform the comparison stays in transformed space
  row.true_rho = t.invertible ? policy_value(mdp, target) : policy_value(tmdp, target);
  row.dual_estimate = est.rho_zeta;
  row.dual_back = t.back(est.rho_zeta, mdp.gamma);
  row.primal_estimate = est.rho_q;
  row.primal_back = t.back(est.rho_q, mdp.gamma);
  return row;
}

void save_robustness_csv(const std::vector<RobustnessRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write robustness file: " + path);
  out << "transform,true_rho,dual_estimate,dual_back,primal_estimate,primal_back\n";
  out.precision(17);
  for (const RobustnessRow& row : rows)
    out << row.transform << "," << row.true_rho << "," << row.dual_estimate << ","
        << row.dual_back << "," << row.primal_estimate << "," << row.primal_back << "\n";
}

}  // namespace dicelp
