#include <doctest.h>

#include <nlohmann/json.hpp>

#include "subsan/config.hpp"

using namespace subsan;
using nlohmann::json;

namespace {

json valid_toy_config() {
  return json{{"env", {{"type", "toy"}, {"discount", 0.9}, {"trigger_height", 2.0}}},
              {"trigger", {{"type", "t0_constant"}, {"complement_axis", 0}, {"magnitude", 2.0}}},
              {"sweep", {{"n_values", {8, 64}}, {"samples_n", 128}}},
              {"seeds", {{"master_seed", 5}, {"trials", 4}}},
              {"evaluation", {{"episodes", 10}, {"tolerance", 1e-3}}},
              {"output", {{"dir", "toy-out"}}}};
}

std::string error_path(const json& j) {
  try {
    config::parse_config(j);
  } catch (const ConfigError& e) {
    return e.path;
  }
  return "";
}

}  // namespace

TEST_CASE("a complete toy config parses") {
  auto cfg = config::parse_config(valid_toy_config());
  CHECK(std::holds_alternative<envs::ToyMdpSpec>(cfg.env));
  CHECK(cfg.trigger.type == "t0_constant");
  CHECK(cfg.trigger.magnitude == 2.0);
  CHECK(cfg.n_values == std::vector<long>{8, 64});
  CHECK(cfg.samples_n == 128);
  CHECK(cfg.master_seed == 5);
  CHECK(cfg.trials == 4);
  CHECK(cfg.eval.episodes == 10);
  CHECK(cfg.centering);  // toy occupancy needs centering by default
  CHECK(cfg.output_dir == "toy-out");
}

TEST_CASE("a planted config parses with its own defaults") {
  json j{{"env",
          {{"type", "planted"},
           {"state_dim", 16},
           {"safe_dim", 3},
           {"complement_noise_bound", 0.5}}},
         {"trigger", {{"type", "constant"}, {"complement_axis", 1}, {"magnitude", 4.0}}}};
  auto cfg = config::parse_config(j);
  const auto& spec = std::get<envs::PlantedEnvSpec>(cfg.env);
  CHECK(spec.state_dim == 16);
  CHECK(spec.safe_dim == 3);
  CHECK(spec.action_count == 4);
  CHECK(spec.complement_noise_bound == 0.5);
  CHECK_FALSE(cfg.centering);
}

TEST_CASE("config errors carry the JSON path of the offending field") {
  CHECK(error_path(json::object()) == "env");
  CHECK(error_path(json{{"env", {{"type", "banana"}}}}) == "env.type");
  CHECK(error_path(json{{"env", {{"type", "planted"}}}}) == "env.state_dim");
  CHECK(error_path(json{{"env", {{"type", "toy"}}},
                        {"trigger", {{"type", "sinusoidal"}}}}) == "trigger.type");
  CHECK(error_path(json{{"env", {{"type", "toy"}}},
                        {"trigger", {{"type", "constant"}}}}) == "trigger.direction");
  CHECK(error_path(json{{"env", {{"type", "toy"}}},
                        {"seeds", {{"trials", 0}}}}) == "seeds.trials");
  CHECK(error_path(json{{"env", {{"type", "toy"}}},
                        {"evaluation", {{"episodes", "many"}}}}) == "evaluation.episodes");
  CHECK(error_path(json{{"env", {{"type", "toy"}}},
                        {"sanitizer", {{"dimension", "auto-banana"}}}}) ==
        "sanitizer.dimension");
}

TEST_CASE("missing config files and invalid JSON are reported") {
  CHECK_THROWS_AS(config::load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("scenario construction from a toy config") {
  auto cfg = config::parse_config(valid_toy_config());
  auto scenario = config::build_scenario(cfg);
  CHECK(scenario.env->state_dim() == 2);
  CHECK(scenario.backdoor->action_count() == 2);
  REQUIRE(scenario.trigger.has_value());
  REQUIRE(scenario.true_safe.has_value());
  CHECK(scenario.true_safe->rank() == 1);
  CHECK(scenario.complement.rank() == 1);
  // the t0 trigger fires only on the first step
  linalg::Vec f(2);
  f << 0.0, 0.0;
  CHECK(scenario.trigger->apply({f})[1] == doctest::Approx(2.0));
  CHECK(scenario.trigger->apply({f, f}).norm() == 0.0);
  CHECK(scenario.centering);
}

TEST_CASE("scenario construction from a planted config") {
  json j{{"env", {{"type", "planted"}, {"state_dim", 8}, {"safe_dim", 2}}},
         {"trigger", {{"type", "constant"}, {"complement_axis", 0}, {"magnitude", 3.0}}}};
  auto cfg = config::parse_config(j);
  auto scenario = config::build_scenario(cfg);
  CHECK(scenario.env->state_dim() == 8);
  CHECK(scenario.true_safe->rank() == 2);
  CHECK(scenario.complement.rank() == 6);
  auto parts = config::planted_parts(cfg, scenario);
  REQUIRE(parts.env);
  REQUIRE(parts.policy);
  // a complement-axis beyond the complement dimension is a config error
  cfg.trigger.complement_axis = 10;
  CHECK_THROWS_AS(config::build_scenario(cfg), ConfigError);
}
