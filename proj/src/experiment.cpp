#include "subsan/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace subsan::experiment {

int truncation_horizon(double gamma, double tol) {
  if (tol <= 0.0) throw InvalidInput("truncation_horizon: tol must be positive");
  if (gamma == 0.0) return 1;
  int t = 1;
  double bias = gamma / (1.0 - gamma);
  while (bias > tol) {
    bias *= gamma;
    ++t;
    if (t > 1000000) throw InvalidInput("truncation_horizon: horizon overflow");
  }
  return t;
}

ValueEstimate mc_value(const envs::Mdp& env, const policies::Policy& policy,
                       const attack::TriggerFunction* trigger, long episodes, double tol,
                       Rng& rng) {
  if (episodes < 1) throw InvalidInput("mc_value: need at least one episode");
  const double gamma = env.discount();
  const int horizon = truncation_horizon(gamma, tol);

  double sum = 0.0, sum_sq = 0.0;
  for (long e = 0; e < episodes; ++e) {
    const attack::TriggeredTrajectory traj =
        trigger ? attack::run_protocol(env, policy, *trigger, horizon, rng)
                : attack::run_clean(env, policy, horizon, rng);
    double ret = 0.0, discount = 1.0;
    for (double r : traj.rewards) {
      ret += discount * r;
      discount *= gamma;
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / episodes;
  const double var = std::max(0.0, sum_sq / episodes - mean * mean);
  ValueEstimate est;
  est.mean = mean;
  est.std_dev = std::sqrt(var);
  est.episodes = episodes;
  est.truncation_horizon = horizon;
  est.truncation_bias_bound = std::pow(gamma, horizon) / (1.0 - gamma);
  return est;
}

namespace {

// Policy rows over the tabulated states, each perceived with `offset` added.
Mat policy_rows(const envs::TabularMdp& env, const policies::Policy& policy,
                const Vec& offset) {
  const int n = env.num_states();
  const int a = env.action_count();
  Mat rows(n, a);
  for (int i = 0; i < n; ++i) rows.row(i) = policy.act(env.states()[i] + offset).transpose();
  return rows;
}

// State-to-state chain and per-state expected reward induced by policy rows.
void induced_chain(const envs::TabularMdp& env, const Mat& rows, Mat& chain, Vec& reward) {
  const int n = env.num_states();
  chain = Mat::Zero(n, n);
  reward = Vec::Zero(n);
  for (int a = 0; a < env.action_count(); ++a) {
    chain += rows.col(a).asDiagonal() * env.transition()[a];
    reward += rows.col(a).cwiseProduct(env.rewards().col(a));
  }
}

Vec markov_state_values(const envs::TabularMdp& env, const Mat& rows) {
  Mat chain;
  Vec reward;
  induced_chain(env, rows, chain, reward);
  const int n = env.num_states();
  const Mat system = Mat::Identity(n, n) - env.discount() * chain;
  return system.partialPivLu().solve(reward);
}

}  // namespace

double exact_value_tabular(const envs::TabularMdp& env, const policies::Policy& policy,
                           const std::vector<Vec>& trigger_schedule) {
  const Vec zero = Vec::Zero(env.state_dim());
  const Vec values = markov_state_values(env, policy_rows(env, policy, zero));
  if (trigger_schedule.empty()) return env.initial_dist().dot(values);

  // Exact forward propagation through the triggered prefix, then the
  // Markovian tail.
  const double gamma = env.discount();
  Vec dist = env.initial_dist();
  double value = 0.0;
  double discount = 1.0;
  for (const Vec& offset : trigger_schedule) {
    const Mat rows = policy_rows(env, policy, offset);
    Mat chain;
    Vec reward;
    induced_chain(env, rows, chain, reward);
    value += discount * dist.dot(reward);
    dist = chain.transpose() * dist;
    discount *= gamma;
  }
  return value + discount * dist.dot(values);
}

double exact_value_tabular(const envs::Mdp& env, const policies::Policy& policy,
                           const std::vector<Vec>& trigger_schedule) {
  const auto* tabular = dynamic_cast<const envs::TabularMdp*>(&env);
  if (!tabular)
    throw NotTabular("exact_value_tabular: environment has no finite state table");
  return exact_value_tabular(*tabular, policy, trigger_schedule);
}

Vec exact_occupancy_tabular(const envs::TabularMdp& env, const policies::Policy& policy) {
  const Vec zero = Vec::Zero(env.state_dim());
  Mat chain;
  Vec reward;
  induced_chain(env, policy_rows(env, policy, zero), chain, reward);
  const int n = env.num_states();
  const Mat system = Mat::Identity(n, n) - env.discount() * chain.transpose();
  Vec occ = system.partialPivLu().solve(env.initial_dist());
  return (1.0 - env.discount()) * occ;
}

PerformanceDifferenceReport verify_performance_difference(const envs::TabularMdp& env,
                                                          const policies::Policy& pi,
                                                          const policies::Policy& pi_prime) {
  const Vec zero = Vec::Zero(env.state_dim());
  const Mat rows_pi = policy_rows(env, pi, zero);
  const Vec v_pi = markov_state_values(env, rows_pi);
  const Vec v_prime = markov_state_values(env, policy_rows(env, pi_prime, zero));
  const double gamma = env.discount();

  // Q^pi'(i, a) = R(i, a) + gamma * sum_j P_a(i, j) V^pi'(j)
  const int n = env.num_states();
  const int a_count = env.action_count();
  Mat q_prime(n, a_count);
  for (int a = 0; a < a_count; ++a)
    q_prime.col(a) = env.rewards().col(a) + gamma * env.transition()[a] * v_prime;

  const Vec occupancy = exact_occupancy_tabular(env, pi);
  double advantage = 0.0;
  for (int i = 0; i < n; ++i)
    advantage += occupancy[i] * (rows_pi.row(i).dot(q_prime.row(i)) - v_prime[i]);

  PerformanceDifferenceReport report;
  report.direct_difference = env.initial_dist().dot(v_pi - v_prime);
  report.advantage_side = advantage / (1.0 - gamma);
  report.discrepancy = std::abs(report.direct_difference - report.advantage_side);
  return report;
}

std::shared_ptr<const envs::TabularMdp> random_tabular_mdp(int num_states, int num_actions,
                                                           double gamma, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Vec> states(num_states);
  for (auto& s : states) s = Vec{{gauss(rng), gauss(rng)}};

  std::vector<Mat> transition(num_actions, Mat(num_states, num_states));
  for (auto& p : transition) {
    for (int i = 0; i < num_states; ++i) {
      Vec row(num_states);
      for (int j = 0; j < num_states; ++j) row[j] = expo(rng);
      p.row(i) = (row / row.sum()).transpose();
    }
  }
  Mat rewards(num_states, num_actions);
  for (int i = 0; i < num_states; ++i)
    for (int a = 0; a < num_actions; ++a) rewards(i, a) = unif(rng);

  Vec initial(num_states);
  for (int i = 0; i < num_states; ++i) initial[i] = expo(rng);
  initial /= initial.sum();

  return std::make_shared<envs::TabularMdp>(std::move(states), std::move(transition),
                                            std::move(rewards), std::move(initial), gamma);
}

policies::PolicyPtr random_tabular_policy(const envs::TabularMdp& env, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<Vec> dists(env.num_states());
  for (auto& d : dists) {
    Vec row(env.action_count());
    for (Eigen::Index a = 0; a < row.size(); ++a) row[a] = expo(rng);
    d = row / row.sum();
  }
  return std::make_shared<policies::TabularLookupPolicy>(env.states(), std::move(dists));
}

std::vector<TheoremOneReport> theorem1_check(
    const std::shared_ptr<const envs::PlantedEnv>& env,
    const std::shared_ptr<const policies::PlantedBackdoorPolicy>& policy,
    const attack::TriggerFunction& trigger, long n, const EvalParams& eval, int num_seeds,
    std::uint64_t master_seed) {
  const double gamma = env->discount();
  const double lipschitz = policy->analytic_lipschitz_bound();
  const linalg::CovarianceEstimate true_cov = env->true_covariance();
  const linalg::EigenModel true_model = linalg::eigendecompose(true_cov);
  const int d = env->spec().safe_dim;
  if (d >= env->state_dim()) {
    // no complement, nothing to bound against
  } else if (true_model.eigenvalues[d - 1] - true_model.eigenvalues[d] <= 0.0) {
    throw DegenerateGap("theorem1_check: true covariance eigen gap is not positive");
  }
  const double eigen_gap =
      d < env->state_dim() ? true_model.eigenvalues[d - 1] - true_model.eigenvalues[d] : 0.0;
  const linalg::Projector true_proj = env->safe_projector();
  const double horizon_factor = 1.0 / ((1.0 - gamma) * (1.0 - gamma));
  const double approximation = lipschitz * horizon_factor * std::sqrt(env->complement_energy());

  std::vector<TheoremOneReport> reports;
  reports.reserve(num_seeds);
  for (int seed = 0; seed < num_seeds; ++seed) {
    Rng rng = make_rng(master_seed, static_cast<std::uint64_t>(n), seed);
    const sanitize::CleanSampleSet samples = sanitize::collect_clean_samples(
        *env, *policy, n, sanitize::SamplingMode::GeometricIid, rng);
    const sanitize::FitResult fit = sanitize::fit_safe_subspace(samples, d, false);
    const auto sanitized = sanitize::sanitize(policy, fit.projector, fit.mean);

    const ValueEstimate clean = mc_value(*env, *policy, nullptr, eval.episodes, eval.tol, rng);
    const ValueEstimate triggered_sanitized =
        mc_value(*env, *sanitized, &trigger, eval.episodes, eval.tol, rng);

    TheoremOneReport report;
    report.clean_value = clean.mean;
    report.sanitized_triggered_value = triggered_sanitized.mean;
    report.gap = clean.mean - triggered_sanitized.mean;
    report.approximation_term = approximation;
    report.projector_error = linalg::projector_distance(true_proj, fit.projector);
    const double b_bound = attack::estimate_B(*env, *sanitized, trigger, 32,
                                              clean.truncation_horizon, rng);
    report.estimation_term = b_bound * lipschitz * horizon_factor * report.projector_error;
    report.mc_std_combined = std::sqrt(clean.std_dev * clean.std_dev +
                                       triggered_sanitized.std_dev * triggered_sanitized.std_dev);
    report.bound_rhs = report.approximation_term + report.estimation_term +
                       3.0 * report.mc_std_combined + clean.truncation_bias_bound +
                       triggered_sanitized.truncation_bias_bound;
    report.holds = report.gap <= report.bound_rhs;
    report.inputs = {lipschitz, b_bound,           eigen_gap, gamma,
                     d,         env->state_dim(),  n,         true,
                     1.0};
    reports.push_back(report);
  }
  return reports;
}

GridPointResult run_grid_point(const Scenario& scenario, long n,
                               const sanitize::DimensionChoice& d_choice,
                               const EvalParams& eval, Rng& rng) {
  GridPointResult result;
  const attack::TriggerFunction* trig =
      scenario.trigger.has_value() ? &scenario.trigger.value() : nullptr;

  const sanitize::CleanSampleSet samples = sanitize::collect_clean_samples(
      *scenario.env, *scenario.backdoor, n, sanitize::SamplingMode::GeometricIid, rng);

  result.clean =
      mc_value(*scenario.env, *scenario.backdoor, nullptr, eval.episodes, eval.tol, rng);
  result.triggered =
      mc_value(*scenario.env, *scenario.backdoor, trig, eval.episodes, eval.tol, rng);

  try {
    const sanitize::FitResult fit =
        sanitize::fit_safe_subspace(samples, d_choice, scenario.centering);
    result.selected_d = fit.selected_d;
    if (scenario.true_safe.has_value() &&
        scenario.true_safe->rank() == fit.projector.rank()) {
      result.projector_error =
          linalg::projector_distance(*scenario.true_safe, fit.projector);
    }
    const auto sanitized = sanitize::sanitize(scenario.backdoor, fit.projector, fit.mean);
    result.sanitized_triggered =
        mc_value(*scenario.env, *sanitized, trig, eval.episodes, eval.tol, rng);
  } catch (const EmptySubspace&) {
    result.empty_subspace = true;
  }
  return result;
}

namespace {

struct Accumulator {
  double mean_sum = 0.0;
  double var_sum = 0.0;
  long count = 0;

  void add(const ValueEstimate& v) {
    mean_sum += v.mean;
    var_sum += v.std_dev * v.std_dev;
    ++count;
  }
  double mean() const { return count ? mean_sum / count : 0.0; }
  double pooled_std() const { return count ? std::sqrt(var_sum / count) : 0.0; }
};

SweepRow aggregate_rows(double grid_value, const std::vector<GridPointResult>& results,
                        long episodes) {
  SweepRow row;
  row.grid_value = grid_value;
  row.episodes = episodes;
  Accumulator clean, triggered, sanitized;
  double proj_sum = 0.0, d_sum = 0.0;
  long usable = 0;
  for (const GridPointResult& r : results) {
    clean.add(r.clean);
    triggered.add(r.triggered);
    if (r.empty_subspace) {
      ++row.failed_trials;
      continue;
    }
    sanitized.add(r.sanitized_triggered);
    if (!std::isnan(r.projector_error)) proj_sum += r.projector_error;
    d_sum += r.selected_d;
    ++usable;
  }
  row.clean_mean = clean.mean();
  row.clean_std = clean.pooled_std();
  row.triggered_mean = triggered.mean();
  row.triggered_std = triggered.pooled_std();
  row.sanitized_mean = sanitized.mean();
  row.sanitized_std = sanitized.pooled_std();
  row.projector_error = usable ? proj_sum / usable : 0.0;
  row.mean_selected_d = usable ? d_sum / usable : 0.0;
  return row;
}

}  // namespace

ExperimentReport sweep_n(const Scenario& scenario, const std::vector<long>& n_values,
                         const sanitize::DimensionChoice& d_choice, const EvalParams& eval,
                         int trials, std::uint64_t master_seed) {
  if (n_values.empty()) throw ConfigError("sweep.n_values", "empty sweep list");
  if (trials < 1) throw ConfigError("seeds.trials", "need at least one trial");
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.master_seed = master_seed;
  report.trials = trials;
  for (std::size_t g = 0; g < n_values.size(); ++g) {
    std::vector<GridPointResult> results;
    results.reserve(trials);
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng = make_rng(master_seed, g, trial);
      results.push_back(run_grid_point(scenario, n_values[g], d_choice, eval, rng));
    }
    report.rows.push_back(
        aggregate_rows(static_cast<double>(n_values[g]), results, eval.episodes));
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport sweep_d(const Scenario& scenario, long n, const std::vector<int>& d_values,
                         const EvalParams& eval, int trials, std::uint64_t master_seed) {
  if (d_values.empty()) throw ConfigError("sweep.d_values", "empty sweep list");
  if (trials < 1) throw ConfigError("seeds.trials", "need at least one trial");
  const auto start = std::chrono::steady_clock::now();
  const attack::TriggerFunction* trig =
      scenario.trigger.has_value() ? &scenario.trigger.value() : nullptr;

  ExperimentReport report;
  report.master_seed = master_seed;
  report.trials = trials;

  // One sample set and one clean/triggered evaluation per trial, reused
  // across the d grid; only the fitted rank changes.
  std::vector<std::vector<GridPointResult>> per_d(d_values.size());
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(master_seed, 0, trial);
    const sanitize::CleanSampleSet samples = sanitize::collect_clean_samples(
        *scenario.env, *scenario.backdoor, n, sanitize::SamplingMode::GeometricIid, rng);
    const ValueEstimate clean =
        mc_value(*scenario.env, *scenario.backdoor, nullptr, eval.episodes, eval.tol, rng);
    const ValueEstimate triggered =
        mc_value(*scenario.env, *scenario.backdoor, trig, eval.episodes, eval.tol, rng);

    for (std::size_t g = 0; g < d_values.size(); ++g) {
      GridPointResult result;
      result.clean = clean;
      result.triggered = triggered;
      try {
        const sanitize::FitResult fit =
            sanitize::fit_safe_subspace(samples, d_values[g], scenario.centering);
        result.selected_d = fit.selected_d;
        if (scenario.true_safe.has_value() &&
            scenario.true_safe->rank() == fit.projector.rank()) {
          result.projector_error =
              linalg::projector_distance(*scenario.true_safe, fit.projector);
        }
        const auto sanitized =
            sanitize::sanitize(scenario.backdoor, fit.projector, fit.mean);
        Rng eval_rng = make_rng(master_seed, g + 1, trial);
        result.sanitized_triggered =
            mc_value(*scenario.env, *sanitized, trig, eval.episodes, eval.tol, eval_rng);
      } catch (const EmptySubspace&) {
        result.empty_subspace = true;
      }
      per_d[g].push_back(std::move(result));
    }
    if (trial == trials - 1) {
      const linalg::CovarianceEstimate cov =
          linalg::empirical_covariance(samples.samples, scenario.centering);
      report.spectrum = linalg::eigendecompose(cov).eigenvalues;
    }
  }

  for (std::size_t g = 0; g < d_values.size(); ++g)
    report.rows.push_back(
        aggregate_rows(static_cast<double>(d_values[g]), per_d[g], eval.episodes));
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidInput("log_log_slope: need matching series with at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<LemmaCheckResult> davis_kahan_suite(long trials, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> dim_dist(4, 10);

  long bound_violations = 0;
  double max_identity_dev = 0.0;
  long accepted = 0;
  while (accepted < trials) {
    const int dim = dim_dist(rng);
    std::uniform_int_distribution<int> d_dist(1, dim - 1);
    const int d = d_dist(rng);

    Mat g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = gauss(rng);
    const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();

    Vec eigs(dim);
    for (int i = 0; i < dim; ++i) eigs[i] = 0.2 + 4.8 * unif(rng);
    std::sort(eigs.data(), eigs.data() + dim, std::greater<double>());
    if (eigs[d - 1] - eigs[d] <= 0.1) continue;  // the theory needs a real gap

    Mat sigma = q * eigs.asDiagonal() * q.transpose();
    sigma = (0.5 * (sigma + sigma.transpose())).eval();

    Mat pert(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) pert(i, j) = gauss(rng);
    pert = (0.5 * (pert + pert.transpose())).eval();
    pert *= (0.3 * unif(rng)) / std::max(1e-12, linalg::spectral_norm_symmetric(pert));
    Mat sigma_hat = sigma + pert;

    const linalg::CovarianceEstimate cov{sigma, 0, Vec::Zero(dim)};
    const linalg::CovarianceEstimate cov_hat{sigma_hat, 0, Vec::Zero(dim)};
    const linalg::Projector p = linalg::projector(linalg::eigendecompose(cov), d);
    const linalg::Projector p_hat = linalg::projector(linalg::eigendecompose(cov_hat), d);

    const double sin_f = linalg::sin_theta_frobenius(p, p_hat);
    if (sin_f > linalg::davis_kahan_bound(cov, cov_hat, d)) ++bound_violations;

    const double identity_dev =
        std::abs(linalg::projector_distance_frobenius(p, p_hat) - std::sqrt(2.0) * sin_f);
    max_identity_dev = std::max(max_identity_dev, identity_dev);
    ++accepted;
  }

  std::vector<LemmaCheckResult> results;
  results.push_back({"davis_kahan_sin_theta_bound", bound_violations == 0,
                     static_cast<double>(bound_violations), 0.0, trials,
                     "violations of the sin-theta Frobenius bound"});
  results.push_back({"frobenius_sin_theta_identity", max_identity_dev <= 1e-9,
                     max_identity_dev, 1e-9, trials,
                     "max |  ||P-Q||_F - sqrt(2)||sin Theta||_F  |"});
  return results;
}

LemmaCheckResult covariance_scaling_suite(Rng& rng) {
  const int dim = 6;
  Vec eigs{{5.0, 4.0, 3.0, 2.0, 1.0, 0.5}};
  const Vec stds = eigs.cwiseSqrt();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Mat sigma = eigs.asDiagonal();

  std::vector<double> ns, medians;
  for (int p = 8; p <= 14; ++p) {
    const long n = 1L << p;
    std::vector<double> errors;
    for (int trial = 0; trial < 50; ++trial) {
      Mat acc = Mat::Zero(dim, dim);
      Vec x(dim);
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < dim; ++k) x[k] = stds[k] * gauss(rng);
        acc.noalias() += x * x.transpose();
      }
      acc /= static_cast<double>(n);
      errors.push_back(linalg::spectral_norm_symmetric(acc - sigma));
    }
    std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
    ns.push_back(static_cast<double>(n));
    medians.push_back(errors[errors.size() / 2]);
  }
  const double slope = log_log_slope(ns, medians);
  return {"covariance_concentration_scaling", std::abs(slope + 0.5) <= 0.1, slope, -0.5,
          50 * static_cast<long>(ns.size()), "log-log slope of median ||Sigma_n - Sigma||_2"};
}

LemmaCheckResult projector_scaling_suite(Rng& rng, const std::vector<long>& n_values,
                                         int trials_per_n) {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 8;
  spec.safe_dim = 2;
  spec.action_count = 3;
  spec.discount = 0.5;  // short episodes; the occupancy law is unchanged
  spec.eigen_profile = Vec{{5.0, 2.5}};
  spec.complement_noise_bound = 0.05;
  const auto env = envs::planted_env(spec);
  const auto policy = policies::planted_backdoor_policy(env, {});
  const linalg::Projector truth = env->safe_projector();

  std::vector<long> ns = n_values;
  if (ns.empty())
    for (int p = 6; p <= 14; ++p) ns.push_back(1L << p);

  std::vector<double> xs, medians;
  for (long n : ns) {
    std::vector<double> errors;
    for (int trial = 0; trial < trials_per_n; ++trial) {
      const sanitize::CleanSampleSet samples = sanitize::collect_clean_samples(
          *env, *policy, n, sanitize::SamplingMode::GeometricIid, rng);
      const sanitize::FitResult fit = sanitize::fit_safe_subspace(samples, 2, false);
      errors.push_back(linalg::projector_distance(truth, fit.projector));
    }
    std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
    xs.push_back(static_cast<double>(n));
    medians.push_back(errors[errors.size() / 2]);
  }
  const double slope = log_log_slope(xs, medians);
  return {"projector_estimation_scaling", std::abs(slope + 0.5) <= 0.1, slope, -0.5,
          static_cast<long>(xs.size()) * trials_per_n,
          "log-log slope of median ||Proj_E - Proj_En||_2"};
}

LemmaCheckResult performance_difference_suite(long random_mdps, Rng& rng) {
  double max_disc = 0.0;

  const envs::ToyMdpSpec toy_spec;
  const auto toy = envs::toy_mdp(toy_spec);
  const auto left = policies::toy_optimal_policy(toy_spec);
  // Right-at-F comparison policy: heads straight for the absorbing sink.
  std::vector<Vec> right_dists(toy->num_states(), Vec{{0.0, 1.0}});
  const auto right =
      std::make_shared<policies::TabularLookupPolicy>(toy->states(), std::move(right_dists));
  max_disc = std::max(max_disc,
                      verify_performance_difference(*toy, *left, *right).discrepancy);
  max_disc =
      std::max(max_disc, verify_performance_difference(*toy, *left, *left).discrepancy);

  for (long i = 0; i < random_mdps; ++i) {
    const auto env = random_tabular_mdp(5, 3, 0.9, rng);
    const auto pi = random_tabular_policy(*env, rng);
    const auto pi_prime = random_tabular_policy(*env, rng);
    max_disc =
        std::max(max_disc, verify_performance_difference(*env, *pi, *pi_prime).discrepancy);
  }
  return {"performance_difference_identity", max_disc <= 1e-8, max_disc, 1e-8,
          random_mdps + 2, "max |direct - advantage route|"};
}

std::vector<LemmaCheckResult> verify_lemmas(std::uint64_t master_seed) {
  std::vector<LemmaCheckResult> results;
  {
    Rng rng = make_rng(master_seed, 1);
    auto dk = davis_kahan_suite(500, rng);
    results.insert(results.end(), dk.begin(), dk.end());
  }
  {
    Rng rng = make_rng(master_seed, 2);
    results.push_back(covariance_scaling_suite(rng));
  }
  {
    Rng rng = make_rng(master_seed, 3);
    results.push_back(projector_scaling_suite(rng));
  }
  {
    Rng rng = make_rng(master_seed, 4);
    results.push_back(performance_difference_suite(100, rng));
  }
  return results;
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& row : report.rows) {
    rows.push_back({{"grid_value", row.grid_value},
                    {"clean_mean", row.clean_mean},
                    {"clean_std", row.clean_std},
                    {"triggered_mean", row.triggered_mean},
                    {"triggered_std", row.triggered_std},
                    {"sanitized_mean", row.sanitized_mean},
                    {"sanitized_std", row.sanitized_std},
                    {"projector_error", row.projector_error},
                    {"mean_selected_d", row.mean_selected_d},
                    {"episodes", row.episodes},
                    {"failed_trials", row.failed_trials}});
  }
  nlohmann::json j{{"config", report.config_echo},
                   {"rows", std::move(rows)},
                   {"master_seed", report.master_seed},
                   {"trials", report.trials},
                   {"wall_clock_seconds", report.wall_clock_seconds}};
  if (report.spectrum.size() > 0) {
    j["spectrum"] = std::vector<double>(report.spectrum.data(),
                                        report.spectrum.data() + report.spectrum.size());
  }
  return j;
}

nlohmann::json to_json(const TheoremOneReport& r) {
  return nlohmann::json{
      {"clean_value", r.clean_value},
      {"sanitized_triggered_value", r.sanitized_triggered_value},
      {"gap", r.gap},
      {"approximation_term", r.approximation_term},
      {"projector_error", r.projector_error},
      {"estimation_term", r.estimation_term},
      {"mc_std_combined", r.mc_std_combined},
      {"bound_rhs", r.bound_rhs},
      {"holds", r.holds},
      {"inputs",
       {{"lipschitz", r.inputs.lipschitz},
        {"b_bound", r.inputs.b_bound},
        {"eigen_gap", r.inputs.eigen_gap},
        {"gamma", r.inputs.gamma},
        {"safe_dim", r.inputs.safe_dim},
        {"state_dim", r.inputs.state_dim},
        {"n_used", r.inputs.n_used},
        {"k_certified", r.inputs.k_certified},
        {"sub_gaussian_k", r.inputs.sub_gaussian_k}}}};
}

}  // namespace subsan::experiment
