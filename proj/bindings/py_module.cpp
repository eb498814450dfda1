#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "subsan/attack.hpp"
#include "subsan/config.hpp"
#include "subsan/environments.hpp"
#include "subsan/errors.hpp"
#include "subsan/experiment.hpp"
#include "subsan/linalg.hpp"
#include "subsan/policies.hpp"
#include "subsan/rng.hpp"
#include "subsan/sanitizer.hpp"

namespace py = pybind11;
using namespace subsan;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Backdoor-policy sanitization toolkit (C++ core)";

  py::register_exception<InvalidInput>(m, "InvalidInput");
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch");
  py::register_exception<DegenerateGap>(m, "DegenerateGap");
  py::register_exception<EmptySubspace>(m, "EmptySubspace");
  py::register_exception<InvalidTrigger>(m, "InvalidTrigger");
  py::register_exception<NotTabular>(m, "NotTabular");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>());
  m.def("make_rng", &make_rng, py::arg("master_seed"), py::arg("grid_index") = 0,
        py::arg("trial_index") = 0);

  // linalg -----------------------------------------------------------------
  py::class_<linalg::CovarianceEstimate>(m, "CovarianceEstimate")
      .def_readonly("matrix", &linalg::CovarianceEstimate::matrix)
      .def_readonly("sample_count", &linalg::CovarianceEstimate::sample_count)
      .def_readonly("mean", &linalg::CovarianceEstimate::mean)
      .def("dim", &linalg::CovarianceEstimate::dim);

  py::class_<linalg::EigenModel>(m, "EigenModel")
      .def_readonly("eigenvalues", &linalg::EigenModel::eigenvalues)
      .def_readonly("eigenvectors", &linalg::EigenModel::eigenvectors)
      .def("dim", &linalg::EigenModel::dim)
      .def("to_json", [](const linalg::EigenModel& model) {
        nlohmann::json j;
        linalg::to_json(j, model);
        return j.dump();
      })
      .def_static("from_json", [](const std::string& text) {
        linalg::EigenModel model;
        linalg::from_json(nlohmann::json::parse(text), model);
        return model;
      });

  py::class_<linalg::Projector>(m, "Projector")
      .def_readonly("basis", &linalg::Projector::basis)
      .def_readonly("matrix", &linalg::Projector::matrix)
      .def("ambient_dim", &linalg::Projector::ambient_dim)
      .def("rank", &linalg::Projector::rank)
      .def("to_json", [](const linalg::Projector& p) {
        nlohmann::json j;
        linalg::to_json(j, p);
        return j.dump();
      })
      .def_static("from_json", [](const std::string& text) {
        linalg::Projector p;
        linalg::from_json(nlohmann::json::parse(text), p);
        return p;
      });

  py::class_<linalg::DimensionStrategy>(m, "DimensionStrategy");
  m.def("absolute_threshold", &linalg::absolute_threshold, py::arg("tau"));
  m.def("largest_relative_gap", &linalg::largest_relative_gap);

  m.def("empirical_covariance", &linalg::empirical_covariance, py::arg("samples"),
        py::arg("center"));
  m.def("eigendecompose", &linalg::eigendecompose);
  m.def("projector", &linalg::projector, py::arg("model"), py::arg("d"));
  m.def("projector_from_basis", &linalg::projector_from_basis);
  m.def("orthonormal_complement", &linalg::orthonormal_complement);
  m.def("projector_distance", &linalg::projector_distance);
  m.def("projector_distance_frobenius", &linalg::projector_distance_frobenius);
  m.def("sin_theta_frobenius", &linalg::sin_theta_frobenius);
  m.def("davis_kahan_bound", &linalg::davis_kahan_bound, py::arg("true_cov"),
        py::arg("est_cov"), py::arg("d"));
  m.def("select_dimension", &linalg::select_dimension);
  m.def("spectral_norm_symmetric", &linalg::spectral_norm_symmetric);

  // environments -----------------------------------------------------------
  py::class_<envs::StepResult>(m, "StepResult")
      .def_readonly("next_state", &envs::StepResult::next_state)
      .def_readonly("reward", &envs::StepResult::reward);

  py::class_<envs::Mdp, std::shared_ptr<envs::Mdp>>(m, "Mdp")
      .def("state_dim", &envs::Mdp::state_dim)
      .def("action_count", &envs::Mdp::action_count)
      .def("discount", &envs::Mdp::discount)
      .def("initial_state", &envs::Mdp::initial_state)
      .def("step", &envs::Mdp::step);

  py::class_<envs::ToyMdpSpec>(m, "ToyMdpSpec")
      .def(py::init<>())
      .def_readwrite("discount", &envs::ToyMdpSpec::discount)
      .def_readwrite("trigger_height", &envs::ToyMdpSpec::trigger_height);

  py::class_<envs::TabularMdp, envs::Mdp, std::shared_ptr<envs::TabularMdp>>(m, "TabularMdp")
      .def("num_states", &envs::TabularMdp::num_states)
      .def("states", &envs::TabularMdp::states)
      .def("nearest_state", &envs::TabularMdp::nearest_state);

  m.def("toy_mdp", &envs::toy_mdp);

  py::class_<envs::PlantedEnvSpec>(m, "PlantedEnvSpec")
      .def(py::init<>())
      .def_readwrite("state_dim", &envs::PlantedEnvSpec::state_dim)
      .def_readwrite("safe_dim", &envs::PlantedEnvSpec::safe_dim)
      .def_readwrite("action_count", &envs::PlantedEnvSpec::action_count)
      .def_readwrite("discount", &envs::PlantedEnvSpec::discount)
      .def_readwrite("eigen_profile", &envs::PlantedEnvSpec::eigen_profile)
      .def_readwrite("noise_scale", &envs::PlantedEnvSpec::noise_scale)
      .def_readwrite("complement_noise_bound", &envs::PlantedEnvSpec::complement_noise_bound)
      .def_readwrite("reward_gain", &envs::PlantedEnvSpec::reward_gain)
      .def_readwrite("seed", &envs::PlantedEnvSpec::seed);

  py::class_<envs::PlantedEnv, envs::Mdp, std::shared_ptr<envs::PlantedEnv>>(m, "PlantedEnv")
      .def("embedding", &envs::PlantedEnv::embedding)
      .def("complement_basis", &envs::PlantedEnv::complement_basis)
      .def("safe_projector", &envs::PlantedEnv::safe_projector)
      .def("true_covariance", &envs::PlantedEnv::true_covariance)
      .def("complement_energy", &envs::PlantedEnv::complement_energy)
      .def("reward", &envs::PlantedEnv::reward);

  m.def("planted_env", &envs::planted_env);

  // policies ---------------------------------------------------------------
  py::class_<policies::Policy, std::shared_ptr<policies::Policy>>(m, "Policy")
      .def("state_dim", &policies::Policy::state_dim)
      .def("action_count", &policies::Policy::action_count)
      .def("act", &policies::Policy::act);

  m.def("sample_action", &policies::sample_action);
  m.def("toy_optimal_policy", &policies::toy_optimal_policy);
  m.def("toy_backdoor_policy", &policies::toy_backdoor_policy);

  py::class_<policies::PlantedPolicyConfig>(m, "PlantedPolicyConfig")
      .def(py::init<>())
      .def_readwrite("temperature", &policies::PlantedPolicyConfig::temperature)
      .def_readwrite("bad_action", &policies::PlantedPolicyConfig::bad_action)
      .def_readwrite("bad_action_score", &policies::PlantedPolicyConfig::bad_action_score)
      .def_readwrite("onset_margin", &policies::PlantedPolicyConfig::onset_margin);

  py::class_<policies::PlantedBackdoorPolicy, policies::Policy,
             std::shared_ptr<policies::PlantedBackdoorPolicy>>(m, "PlantedBackdoorPolicy")
      .def("blend_weight", &policies::PlantedBackdoorPolicy::blend_weight)
      .def("bad_action", &policies::PlantedBackdoorPolicy::bad_action)
      .def("analytic_lipschitz_bound",
           &policies::PlantedBackdoorPolicy::analytic_lipschitz_bound);

  m.def("planted_clean_policy", &policies::planted_clean_policy);
  m.def("planted_backdoor_policy", &policies::planted_backdoor_policy);

  // attack -----------------------------------------------------------------
  py::class_<attack::TriggerFunction>(m, "TriggerFunction")
      .def("apply", &attack::TriggerFunction::apply)
      .def("state_dim", &attack::TriggerFunction::state_dim);

  m.def("constant_trigger", &attack::constant_trigger, py::arg("direction"),
        py::arg("magnitude"), py::arg("complement"));
  m.def("zero_trigger", &attack::zero_trigger);
  m.def("adaptive_trigger", &attack::adaptive_trigger);

  py::class_<attack::TriggeredTrajectory>(m, "TriggeredTrajectory")
      .def_readonly("true_states", &attack::TriggeredTrajectory::true_states)
      .def_readonly("perceived_states", &attack::TriggeredTrajectory::perceived_states)
      .def_readonly("actions", &attack::TriggeredTrajectory::actions)
      .def_readonly("rewards", &attack::TriggeredTrajectory::rewards)
      .def_readonly("trigger_vectors", &attack::TriggeredTrajectory::trigger_vectors)
      .def("length", &attack::TriggeredTrajectory::length)
      .def("to_jsonl", [](const attack::TriggeredTrajectory& traj) {
        std::ostringstream out;
        attack::write_jsonl(traj, out);
        return out.str();
      })
      .def_static("from_jsonl", [](const std::string& text) {
        std::istringstream in(text);
        return attack::read_jsonl(in);
      });

  m.def("run_protocol", &attack::run_protocol, py::arg("env"), py::arg("policy"),
        py::arg("trigger"), py::arg("horizon"), py::arg("rng"));
  m.def("run_clean", &attack::run_clean, py::arg("env"), py::arg("policy"),
        py::arg("horizon"), py::arg("rng"));
  m.def("estimate_B", &attack::estimate_B, py::arg("env"), py::arg("policy"),
        py::arg("trigger"), py::arg("rollouts"), py::arg("horizon"), py::arg("rng"));

  // sanitizer --------------------------------------------------------------
  py::enum_<sanitize::SamplingMode>(m, "SamplingMode")
      .value("GeometricIid", sanitize::SamplingMode::GeometricIid)
      .value("Correlated", sanitize::SamplingMode::Correlated);

  py::class_<sanitize::CleanSampleSet>(m, "CleanSampleSet")
      .def_readonly("samples", &sanitize::CleanSampleSet::samples)
      .def_readonly("episodes_used", &sanitize::CleanSampleSet::episodes_used)
      .def("to_json", [](const sanitize::CleanSampleSet& set) {
        std::ostringstream out;
        sanitize::save_samples(set, out);
        return out.str();
      })
      .def_static("from_json", [](const std::string& text) {
        std::istringstream in(text);
        return sanitize::load_samples(in);
      });

  m.def("collect_clean_samples", &sanitize::collect_clean_samples, py::arg("env"),
        py::arg("policy"), py::arg("n"), py::arg("mode"), py::arg("rng"),
        py::arg("horizon") = 0);

  py::class_<sanitize::FitResult>(m, "FitResult")
      .def_readonly("projector", &sanitize::FitResult::projector)
      .def_readonly("model", &sanitize::FitResult::model)
      .def_readonly("mean", &sanitize::FitResult::mean)
      .def_readonly("selected_d", &sanitize::FitResult::selected_d);

  m.def("fit_safe_subspace", &sanitize::fit_safe_subspace, py::arg("samples"),
        py::arg("d"), py::arg("center"));

  py::class_<sanitize::SanitizedPolicy, policies::Policy,
             std::shared_ptr<sanitize::SanitizedPolicy>>(m, "SanitizedPolicy")
      .def("projector", &sanitize::SanitizedPolicy::projector)
      .def("mean", &sanitize::SanitizedPolicy::mean);

  m.def("sanitize", &sanitize::sanitize, py::arg("policy"), py::arg("projector"),
        py::arg("mean"));

  // experiment -------------------------------------------------------------
  py::class_<experiment::ValueEstimate>(m, "ValueEstimate")
      .def_readonly("mean", &experiment::ValueEstimate::mean)
      .def_readonly("std_dev", &experiment::ValueEstimate::std_dev)
      .def_readonly("episodes", &experiment::ValueEstimate::episodes)
      .def_readonly("truncation_horizon", &experiment::ValueEstimate::truncation_horizon)
      .def_readonly("truncation_bias_bound",
                    &experiment::ValueEstimate::truncation_bias_bound);

  m.def("truncation_horizon", &experiment::truncation_horizon);
  m.def(
      "mc_value",
      [](const envs::Mdp& env, const policies::Policy& policy,
         const attack::TriggerFunction* trigger, long episodes, double tol, Rng& rng) {
        return experiment::mc_value(env, policy, trigger, episodes, tol, rng);
      },
      py::arg("env"), py::arg("policy"), py::arg("trigger") = nullptr,
      py::arg("episodes") = 30, py::arg("tol") = 1e-3, py::arg("rng"));
  m.def(
      "exact_value_tabular",
      [](const envs::Mdp& env, const policies::Policy& policy,
         const std::vector<linalg::Vec>& schedule) {
        return experiment::exact_value_tabular(env, policy, schedule);
      },
      py::arg("env"), py::arg("policy"),
      py::arg("trigger_schedule") = std::vector<linalg::Vec>{});

  py::class_<experiment::LemmaCheckResult>(m, "LemmaCheckResult")
      .def_readonly("name", &experiment::LemmaCheckResult::name)
      .def_readonly("passed", &experiment::LemmaCheckResult::passed)
      .def_readonly("statistic", &experiment::LemmaCheckResult::statistic)
      .def_readonly("threshold", &experiment::LemmaCheckResult::threshold)
      .def_readonly("trials", &experiment::LemmaCheckResult::trials)
      .def_readonly("detail", &experiment::LemmaCheckResult::detail);

  m.def("verify_lemmas", &experiment::verify_lemmas, py::arg("master_seed") = 7);
  m.def("log_log_slope", &experiment::log_log_slope);
}
