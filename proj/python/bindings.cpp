// Python bindings for the core operations: MDP construction, exact solvers,
// data collection, closed-form saddle points, optimization, and LSTDQ.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dicelp/data.hpp"
#include "dicelp/dice.hpp"
#include "dicelp/exact.hpp"
#include "dicelp/lstdq.hpp"
#include "dicelp/mdp.hpp"
#include "dicelp/optim.hpp"
#include "dicelp/sweep.hpp"

namespace py = pybind11;
using namespace dicelp;

PYBIND11_MODULE(_dicelp, m) {
  m.doc() = "Off-policy evaluation toolkit for tabular MDPs";

  py::register_exception<AssumptionViolation>(m, "AssumptionViolation");
  py::register_exception<UnsupportedConfig>(m, "UnsupportedConfig");
  py::register_exception<BiasedConfig>(m, "BiasedConfig");
  py::register_exception<Diverged>(m, "Diverged");
  py::register_exception<RankDeficiency>(m, "RankDeficiencyError");
  py::register_exception<NumericalFailure>(m, "NumericalFailure");

  py::class_<TabularMdp>(m, "TabularMdp")
      .def(py::init<>())
      .def_readwrite("n_states", &TabularMdp::n_states)
      .def_readwrite("n_actions", &TabularMdp::n_actions)
      .def_readwrite("transition", &TabularMdp::transition)
      .def_readwrite("reward", &TabularMdp::reward)
      .def_readwrite("mu0", &TabularMdp::mu0)
      .def_readwrite("gamma", &TabularMdp::gamma)
      .def("reward_vector", &TabularMdp::reward_vector)
      .def("validate", &TabularMdp::validate);

  py::class_<Policy>(m, "Policy")
      .def(py::init<>())
      .def(py::init([](Eigen::MatrixXd probs) {
             Policy p{std::move(probs)};
             p.validate();
             return p;
           }),
           py::arg("probs"))
      .def_readwrite("probs", &Policy::probs);

  py::class_<GridInstance>(m, "GridInstance")
      .def_readonly("mdp", &GridInstance::mdp)
      .def_readonly("target", &GridInstance::target)
      .def_readonly("behavior", &GridInstance::behavior);

  m.def("build_grid", &build_grid, py::arg("side"), py::arg("target_explore") = 0.1,
        py::arg("behavior_explore") = 0.7, py::arg("gamma") = 0.99);
  m.def("policy_operator", &policy_operator);
  m.def("initial_distribution", &initial_distribution);
  m.def("mix_uniform", &mix_uniform);
  m.def("load_mdp_json", &load_mdp_json);
  m.def("save_mdp_json", &save_mdp_json);
  m.def("load_policy_json", &load_policy_json);
  m.def("save_policy_json", &save_policy_json);

  m.def("solve_q", &solve_q);
  m.def("solve_d", &solve_d);
  m.def("policy_value", &policy_value);

  py::class_<UndiscountedSolution>(m, "UndiscountedSolution")
      .def_readonly("visitation", &UndiscountedSolution::visitation)
      .def_readonly("rho", &UndiscountedSolution::rho);
  m.def("solve_undiscounted", &solve_undiscounted);
  m.def("unit_eigenspace_dimension", &unit_eigenspace_dimension);

  py::class_<OfflineDataset>(m, "OfflineDataset")
      .def_readonly("n_states", &OfflineDataset::n_states)
      .def_readonly("n_actions", &OfflineDataset::n_actions)
      .def("__len__", [](const OfflineDataset& ds) { return ds.samples.size(); });
  m.def("collect", &collect, py::arg("mdp"), py::arg("behavior"), py::arg("n_trajectories"),
        py::arg("horizon"), py::arg("rng_seed"));
  m.def("empirical_dD", &empirical_dD);
  m.def("save_dataset_csv", &save_dataset_csv);

  py::class_<DiceConfig>(m, "DiceConfig")
      .def(py::init<>())
      .def_readwrite("alpha_q", &DiceConfig::alpha_q)
      .def_readwrite("alpha_zeta", &DiceConfig::alpha_zeta)
      .def_readwrite("alpha_r", &DiceConfig::alpha_r)
      .def_readwrite("positivity", &DiceConfig::positivity)
      .def_readwrite("normalization", &DiceConfig::normalization)
      .def("describe", &DiceConfig::describe)
      .def("validate", &DiceConfig::validate);
  m.def("named_config", &named_config);

  py::class_<Solution>(m, "Solution")
      .def_readwrite("q", &Solution::q)
      .def_readwrite("zeta", &Solution::zeta)
      .def_readwrite("lam", &Solution::lam);

  py::class_<ExactProblem>(m, "ExactProblem")
      .def(py::init<TabularMdp, Policy, Eigen::VectorXd>(), py::arg("mdp"), py::arg("pi"),
           py::arg("dD"))
      .def_readwrite("mdp", &ExactProblem::mdp)
      .def_readwrite("pi", &ExactProblem::pi)
      .def_readwrite("dD", &ExactProblem::dD);

  py::class_<EstimateTriple>(m, "EstimateTriple")
      .def_readonly("rho_q", &EstimateTriple::rho_q)
      .def_readonly("rho_zeta", &EstimateTriple::rho_zeta)
      .def_readonly("rho_lagrangian", &EstimateTriple::rho_lagrangian);
  m.def("estimate_all", &estimate_all);

  py::class_<ClosedFormResult>(m, "ClosedFormResult")
      .def_readonly("sol", &ClosedFormResult::sol)
      .def_readonly("saddle_value", &ClosedFormResult::saddle_value);
  m.def("closed_form_solution", &closed_form_solution);

  py::class_<SgdaSettings>(m, "SgdaSettings")
      .def(py::init<>())
      .def_readwrite("lr_primal", &SgdaSettings::lr_primal)
      .def_readwrite("lr_dual", &SgdaSettings::lr_dual)
      .def_readwrite("lr_lambda", &SgdaSettings::lr_lambda)
      .def_readwrite("steps", &SgdaSettings::steps)
      .def_readwrite("batch_size", &SgdaSettings::batch_size)
      .def_readwrite("averaging", &SgdaSettings::averaging)
      .def_readwrite("rng_seed", &SgdaSettings::rng_seed);

  py::class_<SgdaResult>(m, "SgdaResult").def_readonly("sol", &SgdaResult::sol);
  m.def(
      "sgda_exact",
      [](const DiceConfig& config, const ExactProblem& problem, const SgdaSettings& settings) {
        return sgda(config, problem, Parametrization::tabular(), settings);
      },
      py::arg("config"), py::arg("problem"), py::arg("settings"));
  m.def(
      "sgda_dataset",
      [](const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
         const TabularMdp& mdp, const SgdaSettings& settings) {
        return sgda(config, dataset, pi, mdp, Parametrization::tabular(), settings);
      },
      py::arg("config"), py::arg("dataset"), py::arg("pi"), py::arg("mdp"), py::arg("settings"));

  m.def("recover_zeta", &recover_zeta);
  m.def(
      "unconstrained_primal_exact",
      [](const DiceConfig& config, const ExactProblem& problem, const SgdaSettings& settings) {
        return unconstrained_primal(config, problem, Parametrization::tabular(), settings).q;
      });
  m.def("unconstrained_primal_dataset",
        [](const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
           const TabularMdp& mdp, const SgdaSettings& settings) {
          return unconstrained_primal(config, dataset, pi, mdp, Parametrization::tabular(),
                                      settings)
              .q;
        });
  m.def(
      "unconstrained_dual_exact",
      [](const DiceConfig& config, const ExactProblem& problem, const SgdaSettings& settings) {
        return unconstrained_dual(config, problem, Parametrization::tabular(), settings).zeta;
      });
  m.def("unconstrained_dual_dataset",
        [](const DiceConfig& config, const OfflineDataset& dataset, const Policy& pi,
           const TabularMdp& mdp, const SgdaSettings& settings) {
          return unconstrained_dual(config, dataset, pi, mdp, Parametrization::tabular(),
                                    settings)
              .zeta;
        });
  m.def("sgda_linear",
        [](const DiceConfig& config, const ExactProblem& problem, const Eigen::MatrixXd& phi,
           const SgdaSettings& settings) {
          return sgda(config, problem, Parametrization::linear(phi), settings);
        });

  m.def("lstdq_value", [](const TabularMdp& mdp, const Policy& pi, const Eigen::MatrixXd& phi,
                          const Eigen::VectorXd& dD, bool dual_route) {
    const LstdqMatrices mats = lstdq_matrices(mdp, pi, FeatureMap{phi}, dD, mdp.gamma);
    return lstdq_estimate(mats, dual_route ? LstdqRoute::Dual : LstdqRoute::Primal);
  });

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("config", &SweepRow::config)
      .def_readonly("estimator", &SweepRow::estimator)
      .def_readonly("estimate", &SweepRow::estimate)
      .def_readonly("true_rho", &SweepRow::true_rho)
      .def_readonly("abs_error", &SweepRow::abs_error);
  py::class_<SweepReport>(m, "SweepReport")
      .def_readonly("rows", &SweepReport::rows)
      .def("mismatches", &SweepReport::mismatches);
  m.def("run_sweep", &run_sweep);
}
