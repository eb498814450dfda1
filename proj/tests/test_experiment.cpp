#include <doctest.h>

#include <cmath>

#include "subsan/attack.hpp"
#include "subsan/environments.hpp"
#include "subsan/experiment.hpp"
#include "subsan/policies.hpp"

using namespace subsan;
using linalg::Mat;
using linalg::Vec;

namespace {

linalg::Projector toy_complement() {
  Mat basis(2, 1);
  basis << 0.0, 1.0;
  return linalg::projector_from_basis(basis);
}

attack::TriggerFunction toy_trigger() {
  Vec y(2);
  y << 0.0, 1.0;
  return attack::constant_trigger(y, 2.0, toy_complement());
}

}  // namespace

TEST_CASE("truncation horizon bounds the discarded tail") {
  CHECK(experiment::truncation_horizon(0.0, 1e-3) == 1);
  for (double gamma : {0.5, 0.9, 0.99}) {
    const int t = experiment::truncation_horizon(gamma, 1e-3);
    CHECK(std::pow(gamma, t) / (1.0 - gamma) <= 1e-3);
    CHECK(std::pow(gamma, t - 1) / (1.0 - gamma) > 1e-3);
  }
  CHECK_THROWS_AS(experiment::truncation_horizon(0.9, 0.0), InvalidInput);
}

TEST_CASE("monte-carlo values of the toy attack") {
  auto env = envs::toy_mdp({});
  auto pi = policies::toy_backdoor_policy({});
  auto trig = toy_trigger();
  Rng rng = make_rng(301);
  // the toy dynamics are deterministic, so the MC std collapses to zero
  auto clean = experiment::mc_value(*env, *pi, nullptr, 10, 1e-6, rng);
  CHECK(clean.mean == doctest::Approx(9.0).epsilon(1e-5));
  CHECK(clean.std_dev == doctest::Approx(0.0));
  auto triggered = experiment::mc_value(*env, *pi, &trig, 10, 1e-6, rng);
  CHECK(triggered.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(triggered.std_dev == doctest::Approx(0.0));
}

TEST_CASE("exact toy values by linear solve") {
  auto env = envs::toy_mdp({});
  auto backdoor = policies::toy_backdoor_policy({});
  auto optimal = policies::toy_optimal_policy({});
  CHECK(experiment::exact_value_tabular(*env, *backdoor) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(experiment::exact_value_tabular(*env, *optimal) == doctest::Approx(9.0).epsilon(1e-12));
  // a single t = 0 trigger pulse collapses the value to the poisoned return
  Vec pulse(2);
  pulse << 0.0, 2.0;
  CHECK(experiment::exact_value_tabular(*env, *backdoor, {pulse}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact evaluation refuses non-tabular environments") {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 4;
  spec.safe_dim = 2;
  auto env = envs::planted_env(spec);
  auto pi = policies::planted_backdoor_policy(env, {});
  CHECK_THROWS_AS(
      experiment::exact_value_tabular(static_cast<const envs::Mdp&>(*env), *pi),
      NotTabular);
}

TEST_CASE("exact toy occupancy under clean play") {
  auto env = envs::toy_mdp({});
  auto pi = policies::toy_backdoor_policy({});
  Vec occ = experiment::exact_occupancy_tabular(*env, *pi);
  CHECK(occ[envs::kToyF] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(occ[envs::kToyE] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(occ.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("performance difference identity on hand-picked policies") {
  auto env = envs::toy_mdp({});
  auto left = policies::toy_optimal_policy({});
  auto report = experiment::verify_performance_difference(*env, *left, *left);
  CHECK(report.direct_difference == doctest::Approx(0.0));
  CHECK(report.discrepancy < 1e-12);

  std::vector<Vec> right_dists(env->num_states(), Vec{{0.0, 1.0}});
  auto right =
      std::make_shared<policies::TabularLookupPolicy>(env->states(), std::move(right_dists));
  report = experiment::verify_performance_difference(*env, *left, *right);
  CHECK(report.direct_difference == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(report.discrepancy < 1e-8);
}

TEST_CASE("performance difference suite passes on random finite MDPs") {
  Rng rng = make_rng(307);
  auto result = experiment::performance_difference_suite(30, rng);
  CHECK(result.passed);
  CHECK(result.statistic <= 1e-8);
}

TEST_CASE("davis-kahan suite reports no violations") {
  Rng rng = make_rng(311);
  auto results = experiment::davis_kahan_suite(100, rng);
  REQUIRE(results.size() == 2);
  CHECK(results[0].passed);
  CHECK(results[1].passed);
}

TEST_CASE("log-log slope recovers an exact power law") {
  std::vector<double> x{16, 64, 256, 1024};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  CHECK(experiment::log_log_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_THROWS_AS(experiment::log_log_slope({1.0}, {1.0}), InvalidInput);
}

TEST_CASE("theorem bound holds on a tail-free planted instance") {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 8;
  spec.safe_dim = 2;
  spec.complement_noise_bound = 0.0;
  auto env = envs::planted_env(spec);
  auto pi = policies::planted_backdoor_policy(env, {});
  Vec dir = env->complement_basis().col(0);
  auto trig = attack::constant_trigger(
      dir, 2.0, linalg::projector_from_basis(env->complement_basis()));
  auto reports = experiment::theorem1_check(env, pi, trig, 512, {20, 1e-2}, 3, 401);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    CHECK(r.approximation_term == 0.0);  // no tail energy outside the subspace
    CHECK(r.holds);
    CHECK(r.inputs.n_used == 512);
  }
}

TEST_CASE("sweep over n recovers the toy clean value after sanitization") {
  experiment::Scenario scenario;
  scenario.env = envs::toy_mdp({});
  scenario.backdoor = policies::toy_backdoor_policy({});
  scenario.trigger = toy_trigger();
  Mat safe(2, 1);
  safe << 1.0, 0.0;
  scenario.true_safe = linalg::projector_from_basis(safe);
  scenario.complement = toy_complement();
  scenario.centering = true;

  auto report = experiment::sweep_n(scenario, {8, 256}, linalg::absolute_threshold(1e-10),
                                    {10, 1e-3}, 5, 811);
  REQUIRE(report.rows.size() == 2);
  const auto& last = report.rows.back();
  CHECK(last.grid_value == 256.0);
  CHECK(last.failed_trials == 0);
  CHECK(last.clean_mean == doctest::Approx(9.0).epsilon(1e-3));
  CHECK(last.triggered_mean == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(last.sanitized_mean == doctest::Approx(9.0).epsilon(1e-3));
  CHECK(last.projector_error == doctest::Approx(0.0));
}

TEST_CASE("empty sweep grids are configuration errors") {
  experiment::Scenario scenario;
  scenario.env = envs::toy_mdp({});
  scenario.backdoor = policies::toy_backdoor_policy({});
  scenario.complement = toy_complement();
  CHECK_THROWS_AS(experiment::sweep_n(scenario, {}, 1, {5, 1e-2}, 2, 1), ConfigError);
  CHECK_THROWS_AS(experiment::sweep_d(scenario, 64, {}, {5, 1e-2}, 2, 1), ConfigError);
}

TEST_CASE("sweeps are deterministic in the master seed") {
  experiment::Scenario scenario;
  scenario.env = envs::toy_mdp({});
  scenario.backdoor = policies::toy_backdoor_policy({});
  scenario.trigger = toy_trigger();
  scenario.complement = toy_complement();
  scenario.centering = true;

  auto a = experiment::sweep_n(scenario, {32}, linalg::absolute_threshold(1e-10),
                               {5, 1e-2}, 3, 99);
  auto b = experiment::sweep_n(scenario, {32}, linalg::absolute_threshold(1e-10),
                               {5, 1e-2}, 3, 99);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows[0].clean_mean == b.rows[0].clean_mean);
  CHECK(a.rows[0].triggered_mean == b.rows[0].triggered_mean);
  CHECK(a.rows[0].sanitized_mean == b.rows[0].sanitized_mean);
  CHECK(a.rows[0].projector_error == b.rows[0].projector_error);
}

TEST_CASE("sweep over d reuses samples and reports the spectrum") {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 6;
  spec.safe_dim = 2;
  spec.complement_noise_bound = 0.01;
  auto env = envs::planted_env(spec);
  experiment::Scenario scenario;
  scenario.env = env;
  scenario.backdoor = policies::planted_backdoor_policy(env, {});
  scenario.trigger = attack::constant_trigger(
      env->complement_basis().col(0), 2.0,
      linalg::projector_from_basis(env->complement_basis()));
  scenario.true_safe = env->safe_projector();
  scenario.complement = linalg::projector_from_basis(env->complement_basis());

  auto report = experiment::sweep_d(scenario, 256, {1, 2, 4}, {10, 1e-2}, 3, 313);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.spectrum.size() == 6);
  // clean/triggered columns are shared across the d grid by construction
  CHECK(report.rows[0].clean_mean == report.rows[2].clean_mean);
  CHECK(report.rows[0].triggered_mean == report.rows[2].triggered_mean);
  CHECK(report.rows[1].mean_selected_d == doctest::Approx(2.0));
}

TEST_CASE("value estimation works at discount zero") {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 4;
  spec.safe_dim = 2;
  spec.discount = 0.0;
  auto env = envs::planted_env(spec);
  auto pi = policies::planted_backdoor_policy(env, {});
  Rng rng = make_rng(317);
  auto v = experiment::mc_value(*env, *pi, nullptr, 200, 1e-3, rng);
  CHECK(v.truncation_horizon == 1);
  CHECK(v.mean >= 0.0);
  CHECK(v.mean <= 1.0);
}
