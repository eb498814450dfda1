#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "subsan/environments.hpp"
#include "subsan/experiment.hpp"
#include "subsan/policies.hpp"
#include "subsan/sanitizer.hpp"

namespace subsan::config {

/// Trigger description as it appears in the experiment config.
struct TriggerSpec {
  std::string type = "constant";  // "none" | "constant" | "t0_constant"
  // Either an explicit direction vector or a complement-basis column index.
  std::vector<double> direction;
  int complement_axis = -1;
  double magnitude = 0.0;
  // "t0_constant" fires only at t = 0 (the toy-MDP attack); "constant"
  // fires at every step.
};

struct ExperimentConfig {
  std::variant<envs::ToyMdpSpec, envs::PlantedEnvSpec> env;
  policies::PlantedPolicyConfig policy;  // used by the planted env only
  TriggerSpec trigger;

  std::vector<long> n_values;
  std::vector<int> d_values;
  long samples_n = 1024;  // n for sweep_d / spectrum / theorem1

  std::uint64_t master_seed = 1;
  int trials = 20;

  experiment::EvalParams eval;

  bool centering = false;
  sanitize::DimensionChoice dimension = linalg::absolute_threshold(1e-10);

  std::string output_dir = "out";
};

/// Parses and validates; throws ConfigError with the JSON path of the
/// offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

/// Instantiates environment, backdoor policy, trigger, and true-subspace
/// metadata from a parsed config.
experiment::Scenario build_scenario(const ExperimentConfig& config);

/// The planted pieces when the config uses the planted env (null otherwise);
/// needed by the theorem1 subcommand.
struct PlantedScenario {
  std::shared_ptr<const envs::PlantedEnv> env;
  std::shared_ptr<const policies::PlantedBackdoorPolicy> policy;
};
PlantedScenario planted_parts(const ExperimentConfig& config,
                              const experiment::Scenario& scenario);

}  // namespace subsan::config
