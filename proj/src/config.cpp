#include "subsan/config.hpp"

#include <fstream>

#include "subsan/attack.hpp"

namespace subsan::config {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const nlohmann::json& require(const nlohmann::json& j, const std::string& path,
                              const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required field");
  return j.at(key);
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& path, const std::string& key,
         T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(join(path, key), "wrong type");
  }
}

template <typename T>
T get_required(const nlohmann::json& j, const std::string& path, const std::string& key) {
  const nlohmann::json& field = require(j, path, key);
  try {
    return field.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(join(path, key), "wrong type");
  }
}

linalg::Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const linalg::Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

envs::PlantedEnvSpec parse_planted(const nlohmann::json& j, const std::string& path) {
  envs::PlantedEnvSpec spec;
  spec.state_dim = get_required<int>(j, path, "state_dim");
  spec.safe_dim = get_required<int>(j, path, "safe_dim");
  spec.action_count = get_or<int>(j, path, "action_count", spec.safe_dim + 1);
  spec.discount = get_or<double>(j, path, "discount", 0.9);
  if (j.contains("eigenvalues"))
    spec.eigen_profile = to_vec(get_required<std::vector<double>>(j, path, "eigenvalues"));
  spec.complement_noise_bound = get_or<double>(j, path, "complement_noise_bound", 0.0);
  spec.noise_scale = get_or<double>(j, path, "noise_scale", 1.0);
  spec.reward_gain = get_or<double>(j, path, "reward_gain", 0.3);
  spec.seed = get_or<std::uint64_t>(j, path, "seed", 0);
  return spec;
}

envs::ToyMdpSpec parse_toy(const nlohmann::json& j, const std::string& path) {
  envs::ToyMdpSpec spec;
  spec.discount = get_or<double>(j, path, "discount", 0.9);
  spec.trigger_height = get_or<double>(j, path, "trigger_height", 2.0);
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig config;

  const nlohmann::json& env = require(j, "", "env");
  const std::string env_type = get_required<std::string>(env, "env", "type");
  if (env_type == "toy") {
    config.env = parse_toy(env, "env");
    config.centering = true;  // toy occupancy has a nonzero mean
  } else if (env_type == "planted") {
    config.env = parse_planted(env, "env");
    config.centering = false;
  } else {
    throw ConfigError("env.type", "must be \"toy\" or \"planted\"");
  }

  if (j.contains("policy")) {
    const nlohmann::json& p = j.at("policy");
    config.policy.temperature = get_or<double>(p, "policy", "temperature", 0.25);
    config.policy.bad_action = get_or<int>(p, "policy", "bad_action", -1);
    config.policy.bad_action_score = get_or<double>(p, "policy", "bad_action_score", -2.0);
    config.policy.onset_margin = get_or<double>(p, "policy", "onset_margin", 0.5);
  }

  if (j.contains("trigger")) {
    const nlohmann::json& t = j.at("trigger");
    config.trigger.type = get_or<std::string>(t, "trigger", "type", "constant");
    if (config.trigger.type != "none" && config.trigger.type != "constant" &&
        config.trigger.type != "t0_constant")
      throw ConfigError("trigger.type", "must be \"none\", \"constant\" or \"t0_constant\"");
    config.trigger.direction =
        get_or<std::vector<double>>(t, "trigger", "direction", {});
    config.trigger.complement_axis = get_or<int>(t, "trigger", "complement_axis", -1);
    config.trigger.magnitude = get_or<double>(t, "trigger", "magnitude", 0.0);
    if (config.trigger.type != "none" && config.trigger.direction.empty() &&
        config.trigger.complement_axis < 0)
      throw ConfigError("trigger.direction",
                        "need an explicit direction or a complement_axis");
  } else {
    config.trigger.type = "none";
  }

  if (j.contains("sweep")) {
    const nlohmann::json& s = j.at("sweep");
    config.n_values = get_or<std::vector<long>>(s, "sweep", "n_values", {});
    config.d_values = get_or<std::vector<int>>(s, "sweep", "d_values", {});
    config.samples_n = get_or<long>(s, "sweep", "samples_n", 1024);
  }

  if (j.contains("seeds")) {
    const nlohmann::json& s = j.at("seeds");
    config.master_seed = get_or<std::uint64_t>(s, "seeds", "master_seed", 1);
    config.trials = get_or<int>(s, "seeds", "trials", 20);
    if (config.trials < 1) throw ConfigError("seeds.trials", "must be positive");
  }

  if (j.contains("evaluation")) {
    const nlohmann::json& e = j.at("evaluation");
    config.eval.episodes = get_or<long>(e, "evaluation", "episodes", 30);
    config.eval.tol = get_or<double>(e, "evaluation", "tolerance", 1e-3);
    if (config.eval.episodes < 1) throw ConfigError("evaluation.episodes", "must be positive");
    if (config.eval.tol <= 0.0) throw ConfigError("evaluation.tolerance", "must be positive");
  }

  if (j.contains("sanitizer")) {
    const nlohmann::json& s = j.at("sanitizer");
    config.centering = get_or<bool>(s, "sanitizer", "center", config.centering);
    if (s.contains("dimension")) {
      const nlohmann::json& d = s.at("dimension");
      if (d.is_number_integer()) {
        config.dimension = d.get<int>();
      } else if (d.is_string()) {
        const std::string mode = d.get<std::string>();
        if (mode == "auto-threshold") {
          config.dimension = linalg::absolute_threshold(
              get_or<double>(s, "sanitizer", "threshold", 1e-10));
        } else if (mode == "auto-gap") {
          config.dimension = linalg::largest_relative_gap();
        } else {
          throw ConfigError("sanitizer.dimension",
                            "must be an integer, \"auto-threshold\" or \"auto-gap\"");
        }
      } else {
        throw ConfigError("sanitizer.dimension", "wrong type");
      }
    }
  }

  if (j.contains("output")) {
    config.output_dir = get_or<std::string>(j.at("output"), "output", "dir", "out");
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

experiment::Scenario build_scenario(const ExperimentConfig& config) {
  experiment::Scenario scenario;
  scenario.centering = config.centering;

  linalg::Mat complement_basis;
  if (std::holds_alternative<envs::ToyMdpSpec>(config.env)) {
    const auto& spec = std::get<envs::ToyMdpSpec>(config.env);
    scenario.env = envs::toy_mdp(spec);
    scenario.backdoor = policies::toy_backdoor_policy(spec);
    linalg::Mat safe(2, 1);
    safe << 1.0, 0.0;  // the bottom row spans the x-axis
    scenario.true_safe = linalg::projector_from_basis(safe);
    complement_basis = linalg::Mat(2, 1);
    complement_basis << 0.0, 1.0;
  } else {
    const auto& spec = std::get<envs::PlantedEnvSpec>(config.env);
    auto env = envs::planted_env(spec);
    scenario.env = env;
    scenario.backdoor = policies::planted_backdoor_policy(env, config.policy);
    scenario.true_safe = env->safe_projector();
    complement_basis = env->complement_basis();
  }
  scenario.complement = linalg::projector_from_basis(complement_basis);

  if (config.trigger.type != "none") {
    linalg::Vec direction;
    if (!config.trigger.direction.empty()) {
      direction = to_vec(config.trigger.direction);
      const double norm = direction.norm();
      if (norm == 0.0) throw ConfigError("trigger.direction", "zero direction vector");
      direction /= norm;
    } else {
      if (config.trigger.complement_axis >= complement_basis.cols())
        throw ConfigError("trigger.complement_axis", "index exceeds complement dimension");
      direction = complement_basis.col(config.trigger.complement_axis);
    }
    if (config.trigger.type == "constant") {
      scenario.trigger =
          attack::constant_trigger(direction, config.trigger.magnitude, scenario.complement);
    } else {
      const linalg::Vec v = config.trigger.magnitude * direction;
      const linalg::Vec zero = linalg::Vec::Zero(direction.size());
      scenario.trigger = attack::adaptive_trigger(
          [v, zero](const std::vector<linalg::Vec>& history) {
            return history.size() == 1 ? v : zero;
          },
          scenario.complement);
    }
  }
  return scenario;
}

PlantedScenario planted_parts(const ExperimentConfig& config,
                              const experiment::Scenario& scenario) {
  PlantedScenario parts;
  if (!std::holds_alternative<envs::PlantedEnvSpec>(config.env)) return parts;
  parts.env = std::dynamic_pointer_cast<const envs::PlantedEnv>(scenario.env);
  parts.policy =
      std::dynamic_pointer_cast<const policies::PlantedBackdoorPolicy>(scenario.backdoor);
  return parts;
}

}  // namespace subsan::config
