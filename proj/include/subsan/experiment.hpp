#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subsan/attack.hpp"
#include "subsan/environments.hpp"
#include "subsan/linalg.hpp"
#include "subsan/policies.hpp"
#include "subsan/rng.hpp"
#include "subsan/sanitizer.hpp"

namespace subsan::experiment {

using linalg::Mat;
using linalg::Vec;

/// Monte-Carlo value with explicit truncation accounting.
struct ValueEstimate {
  double mean = 0.0;
  double std_dev = 0.0;  // standard deviation of per-episode returns
  long episodes = 0;
  int truncation_horizon = 0;
  double truncation_bias_bound = 0.0;  // gamma^T / (1 - gamma)
};

/// Smallest T with gamma^T / (1 - gamma) <= tol.
int truncation_horizon(double gamma, double tol);

/// Truncated discounted return averaged over episodes; with a trigger the
/// episodes run through the backdoored interaction protocol, without one they
/// are clean rollouts.
ValueEstimate mc_value(const envs::Mdp& env, const policies::Policy& policy,
                       const attack::TriggerFunction* trigger, long episodes, double tol,
                       Rng& rng);

/// Exact policy evaluation on a finite-state MDP by solving the linear
/// system. An optional trigger schedule gives the trigger vector applied at
/// t = 0, 1, ... (none afterwards); the triggered prefix is evaluated by
/// exact forward distribution propagation.
double exact_value_tabular(const envs::TabularMdp& env, const policies::Policy& policy,
                           const std::vector<Vec>& trigger_schedule = {});

/// Same, but accepts any Mdp and throws NotTabular when exact evaluation is
/// not available.
double exact_value_tabular(const envs::Mdp& env, const policies::Policy& policy,
                           const std::vector<Vec>& trigger_schedule = {});

/// Exact discounted occupancy (1-gamma) sum_t gamma^t P(s_t = i) over the
/// tabulated states.
Vec exact_occupancy_tabular(const envs::TabularMdp& env, const policies::Policy& policy);

/// Both sides of the Markovian performance-difference identity
/// V^pi - V^pi' = 1/(1-gamma) E_{s ~ d^pi}[Q^pi'(s, pi(s)) - V^pi'(s)],
/// computed by independent exact routes.
struct PerformanceDifferenceReport {
  double direct_difference = 0.0;     // V^pi(mu) - V^pi'(mu)
  double advantage_side = 0.0;        // occupancy-weighted advantage route
  double discrepancy = 0.0;
};

PerformanceDifferenceReport verify_performance_difference(const envs::TabularMdp& env,
                                                          const policies::Policy& pi,
                                                          const policies::Policy& pi_prime);

/// Random finite MDP with states embedded in the plane; used as a fixture
/// factory for the performance-difference property checks.
std::shared_ptr<const envs::TabularMdp> random_tabular_mdp(int num_states, int num_actions,
                                                           double gamma, Rng& rng);
policies::PolicyPtr random_tabular_policy(const envs::TabularMdp& env, Rng& rng);

struct EvalParams {
  long episodes = 30;
  double tol = 1e-3;  // truncation bias target
};

struct TheoremInputs {
  double lipschitz = 0.0;       // analytic upper bound on L
  double b_bound = 0.0;         // Monte-Carlo estimate of B
  double eigen_gap = 0.0;       // delta_* of the true covariance
  double gamma = 0.0;
  int safe_dim = 0;
  int state_dim = 0;
  long n_used = 0;
  bool k_certified = false;     // sub-Gaussian parameter known (Gaussian latent)
  double sub_gaussian_k = 0.0;
};

/// One seeded end-to-end run checked against the performance bound
///   gap <= L/(1-gamma)^2 sqrt(tail energy)
///          + B L/(1-gamma)^2 ||Proj_E - Proj_En||_2 + 3 * MC std.
struct TheoremOneReport {
  double clean_value = 0.0;               // V*, measured as clean value of the backdoor policy
  double sanitized_triggered_value = 0.0;
  double gap = 0.0;
  double approximation_term = 0.0;
  double projector_error = 0.0;           // spectral norm, measured
  double estimation_term = 0.0;
  double mc_std_combined = 0.0;
  double bound_rhs = 0.0;
  bool holds = false;
  TheoremInputs inputs;
};

std::vector<TheoremOneReport> theorem1_check(
    const std::shared_ptr<const envs::PlantedEnv>& env,
    const std::shared_ptr<const policies::PlantedBackdoorPolicy>& policy,
    const attack::TriggerFunction& trigger, long n, const EvalParams& eval, int num_seeds,
    std::uint64_t master_seed);

/// One fitted-and-evaluated configuration: the three Fig.-4-style curves at a
/// single grid point.
struct GridPointResult {
  ValueEstimate clean;
  ValueEstimate triggered;
  ValueEstimate sanitized_triggered;
  double projector_error = std::numeric_limits<double>::quiet_NaN();
  int selected_d = 0;
  bool empty_subspace = false;  // sampling produced no usable subspace
};

/// Scenario bundles everything a sweep grid point needs. `true_safe` is set
/// when the environment's exact safe subspace is known (planted env, toy MDP).
struct Scenario {
  std::shared_ptr<const envs::Mdp> env;
  policies::PolicyPtr backdoor;
  std::optional<attack::TriggerFunction> trigger;
  std::optional<linalg::Projector> true_safe;
  linalg::Projector complement;  // target of the trigger
  bool centering = false;
};

GridPointResult run_grid_point(const Scenario& scenario, long n,
                               const sanitize::DimensionChoice& d_choice,
                               const EvalParams& eval, Rng& rng);

struct SweepRow {
  double grid_value = 0.0;  // n or d
  double clean_mean = 0.0, clean_std = 0.0;
  double triggered_mean = 0.0, triggered_std = 0.0;
  double sanitized_mean = 0.0, sanitized_std = 0.0;
  double projector_error = 0.0;  // mean over usable trials
  double mean_selected_d = 0.0;
  long episodes = 0;
  long failed_trials = 0;  // EmptySubspace occurrences, reported not crashed
};

struct ExperimentReport {
  nlohmann::json config_echo;
  std::vector<SweepRow> rows;
  Vec spectrum;  // eigenvalues of the last fitted covariance (sweep_d, spectrum)
  std::uint64_t master_seed = 0;
  int trials = 0;
  double wall_clock_seconds = 0.0;
};

ExperimentReport sweep_n(const Scenario& scenario, const std::vector<long>& n_values,
                         const sanitize::DimensionChoice& d_choice, const EvalParams& eval,
                         int trials, std::uint64_t master_seed);

ExperimentReport sweep_d(const Scenario& scenario, long n, const std::vector<int>& d_values,
                         const EvalParams& eval, int trials, std::uint64_t master_seed);

/// One named numerical check with its pinned threshold.
struct LemmaCheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double threshold = 0.0;
  long trials = 0;
  std::string detail;
};

/// Randomized Davis-Kahan trials: sin-theta bound plus the exact Frobenius
/// identity ||P - P_hat||_F = sqrt(2) ||sin Theta||_F.
std::vector<LemmaCheckResult> davis_kahan_suite(long trials, Rng& rng);

/// Median spectral deviation of the empirical covariance vs n follows a
/// -1/2 log-log slope.
LemmaCheckResult covariance_scaling_suite(Rng& rng);

/// Median ||Proj_E - Proj_En||_2 on a planted env follows a -1/2 slope.
LemmaCheckResult projector_scaling_suite(Rng& rng,
                                         const std::vector<long>& n_values = {},
                                         int trials_per_n = 50);

/// Performance-difference identity on the toy MDP and random finite MDPs.
LemmaCheckResult performance_difference_suite(long random_mdps, Rng& rng);

/// All four suites; the verify-lemmas CLI subcommand prints these.
std::vector<LemmaCheckResult> verify_lemmas(std::uint64_t master_seed);

/// Ordinary least squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const ExperimentReport& report);
nlohmann::json to_json(const TheoremOneReport& report);

}  // namespace subsan::experiment
