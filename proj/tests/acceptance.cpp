// End-to-end acceptance checks. Each check prints a single PASS/FAIL line;
// the process exits nonzero if any check fails.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "subsan/attack.hpp"
#include "subsan/environments.hpp"
#include "subsan/experiment.hpp"
#include "subsan/linalg.hpp"
#include "subsan/policies.hpp"
#include "subsan/sanitizer.hpp"

using namespace subsan;
using linalg::Mat;
using linalg::Vec;

namespace {

int failures = 0;

void report(const std::string& name, bool passed, const std::string& detail) {
  std::printf("%s  %-38s %s\n", passed ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  if (!passed) ++failures;
}

Vec toy_pulse() {
  Vec v(2);
  v << 0.0, 2.0;
  return v;
}

// Planted scenario shared by the value-curve checks.
struct PlantedSetup {
  std::shared_ptr<const envs::PlantedEnv> env;
  std::shared_ptr<const policies::PlantedBackdoorPolicy> policy;
  attack::TriggerFunction trigger;
};

PlantedSetup make_planted(double c0, double trigger_magnitude) {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 16;
  spec.safe_dim = 3;
  spec.complement_noise_bound = c0;
  auto env = envs::planted_env(spec);
  auto policy = policies::planted_backdoor_policy(env, {});
  auto complement = linalg::projector_from_basis(env->complement_basis());
  auto trigger =
      attack::constant_trigger(env->complement_basis().col(0), trigger_magnitude, complement);
  return {env, policy, trigger};
}

void check_toy_exact_values() {
  auto env = envs::toy_mdp({});
  auto optimal = policies::toy_optimal_policy({});
  auto backdoor = policies::toy_backdoor_policy({});
  const double clean = experiment::exact_value_tabular(*env, *optimal);
  const double attacked = experiment::exact_value_tabular(*env, *backdoor, {toy_pulse()});
  char detail[128];
  std::snprintf(detail, sizeof(detail), "clean=%.12f attacked=%.12f", clean, attacked);
  report("toy-attack-values", std::abs(clean - 9.0) <= 1e-9 && std::abs(attacked - 1.0) <= 1e-9,
         detail);
}

void check_toy_sanitization_recovery() {
  auto env = envs::toy_mdp({});
  auto backdoor = policies::toy_backdoor_policy({});
  long usable = 0, ok = 0, degenerate = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = make_rng(42, 0, trial);
    auto samples = sanitize::collect_clean_samples(*env, *backdoor, 5,
                                                   sanitize::SamplingMode::GeometricIid, rng);
    try {
      auto fit = sanitize::fit_safe_subspace(samples, linalg::absolute_threshold(1e-10), true);
      auto wrapped = sanitize::sanitize(backdoor, fit.projector, fit.mean);
      const double value = experiment::exact_value_tabular(*env, *wrapped, {toy_pulse()});
      worst = std::max(worst, std::abs(value - 9.0));
      ++usable;
      ok += std::abs(value - 9.0) <= 1e-9;
    } catch (const EmptySubspace&) {
      ++degenerate;  // all five samples landed on the same state
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "usable=%ld/20 max|v-9|=%.2e degenerate=%ld", usable,
                worst, degenerate);
  report("toy-sanitization-recovery", usable > 0 && ok == usable, detail);
}

void check_value_curves() {
  auto setup = make_planted(0.0, 4.0);
  experiment::Scenario scenario;
  scenario.env = setup.env;
  scenario.backdoor = setup.policy;
  scenario.trigger = setup.trigger;
  scenario.true_safe = setup.env->safe_projector();
  scenario.complement = linalg::projector_from_basis(setup.env->complement_basis());

  std::vector<long> ns;
  for (int p = 4; p <= 12; ++p) ns.push_back(1L << p);
  const experiment::EvalParams eval{30, 1e-3};

  int recovered = 0, separated = 0, cells = 0;
  for (int seed = 0; seed < 20; ++seed) {
    for (std::size_t g = 0; g < ns.size(); ++g) {
      Rng rng = make_rng(1001, g, seed);
      auto r = experiment::run_grid_point(scenario, ns[g], 3, eval, rng);
      const double sep_std = std::sqrt(r.clean.std_dev * r.clean.std_dev +
                                       r.triggered.std_dev * r.triggered.std_dev);
      separated += r.clean.mean - r.triggered.mean >= 5.0 * sep_std;
      ++cells;
      if (g + 1 == ns.size()) {
        const double combined = std::sqrt(
            r.clean.std_dev * r.clean.std_dev +
            r.sanitized_triggered.std_dev * r.sanitized_triggered.std_dev);
        recovered += std::abs(r.sanitized_triggered.mean - r.clean.mean) <= combined;
      }
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "recovered=%d/20 separated=%d/%d", recovered,
                separated, cells);
  report("value-curves-vs-n", recovered >= 19 && separated == cells, detail);
}

void check_performance_bound() {
  auto setup = make_planted(0.5, 4.0);
  long holds = 0, total = 0;
  for (long n : {64L, 512L, 4096L}) {
    auto reports =
        experiment::theorem1_check(setup.env, setup.policy, setup.trigger, n, {30, 1e-3}, 20, 7);
    for (const auto& r : reports) {
      holds += r.holds;
      ++total;
    }
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "within-bound=%ld/%ld", holds, total);
  report("performance-bound", holds == total, detail);
}

void check_estimation_scaling() {
  Rng rng = make_rng(5005);
  auto result = experiment::projector_scaling_suite(rng);
  char detail[64];
  std::snprintf(detail, sizeof(detail), "slope=%.3f target=-0.5+-0.1", result.statistic);
  report("estimation-error-scaling", result.passed, detail);
}

void check_subspace_perturbation() {
  Rng rng = make_rng(6006);
  auto results = experiment::davis_kahan_suite(500, rng);
  char detail[96];
  std::snprintf(detail, sizeof(detail), "violations=%.0f identity-dev=%.2e",
                results[0].statistic, results[1].statistic);
  report("subspace-perturbation-bound", results[0].passed && results[1].passed, detail);
}

void check_performance_difference() {
  Rng rng = make_rng(7007);
  auto result = experiment::performance_difference_suite(100, rng);
  char detail[64];
  std::snprintf(detail, sizeof(detail), "max-discrepancy=%.2e", result.statistic);
  report("performance-difference-identity", result.passed, detail);
}

void check_dimension_sweep() {
  auto setup = make_planted(1e-4, 4.0);
  experiment::Scenario scenario;
  scenario.env = setup.env;
  scenario.backdoor = setup.policy;
  scenario.trigger = setup.trigger;
  scenario.true_safe = setup.env->safe_projector();
  scenario.complement = linalg::projector_from_basis(setup.env->complement_basis());

  auto report_d =
      experiment::sweep_d(scenario, 2048, {1, 2, 3, 8, 16}, {30, 1e-3}, 10, 8008);
  double at_true = 0.0, best_other = -1e9;
  for (const auto& row : report_d.rows) {
    if (row.grid_value == 3.0)
      at_true = row.sanitized_mean;
    else
      best_other = std::max(best_other, row.sanitized_mean);
  }
  const bool peak = at_true > best_other;
  bool spectrum_drop = false;
  if (report_d.spectrum.size() >= 4 && report_d.spectrum[3] > 0.0)
    spectrum_drop = report_d.spectrum[2] / report_d.spectrum[3] >= 1e4;
  char detail[128];
  std::snprintf(detail, sizeof(detail), "value(d=3)=%.3f best-other=%.3f drop=%.1e",
                at_true, best_other,
                report_d.spectrum.size() >= 4 && report_d.spectrum[3] > 0.0
                    ? report_d.spectrum[2] / report_d.spectrum[3]
                    : 0.0);
  report("dimension-sweep-shape", peak && spectrum_drop, detail);
}

}  // namespace

int main() {
  check_toy_exact_values();
  check_toy_sanitization_recovery();
  check_value_curves();
  check_performance_bound();
  check_estimation_scaling();
  check_subspace_perturbation();
  check_performance_difference();
  check_dimension_sweep();
  return failures == 0 ? 0 : 1;
}
