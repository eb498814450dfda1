#include "subsan/attack.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace subsan::attack {

namespace {
constexpr double kMembershipTol = 1e-10;
}

TriggerFunction::TriggerFunction(Rule rule, linalg::Projector complement)
    : rule_(std::move(rule)), complement_(std::move(complement)) {
  if (!rule_) throw InvalidInput("TriggerFunction: empty rule");
  const int dim = complement_.ambient_dim();
  safe_matrix_ = Mat::Identity(dim, dim) - complement_.matrix;
}

Vec TriggerFunction::apply(const std::vector<Vec>& history) const {
  if (history.empty()) throw InvalidInput("TriggerFunction: empty history");
  Vec v = rule_(history);
  if (v.size() != state_dim())
    throw DimensionMismatch("TriggerFunction: trigger dimension mismatch");
  if ((safe_matrix_ * v).norm() > kMembershipTol)
    throw InvalidTrigger("trigger vector leaves the complement subspace");
  return v;
}

TriggerFunction constant_trigger(const Vec& direction, double magnitude,
                                 const linalg::Projector& complement) {
  if (std::abs(direction.norm() - 1.0) > 1e-9)
    throw InvalidTrigger("constant_trigger: direction must be unit norm");
  const int dim = complement.ambient_dim();
  const Mat safe = Mat::Identity(dim, dim) - complement.matrix;
  if ((safe * direction).norm() > kMembershipTol)
    throw InvalidTrigger("constant_trigger: direction not in the complement subspace");
  Vec v = magnitude * direction;
  return TriggerFunction([v](const std::vector<Vec>&) { return v; }, complement);
}

TriggerFunction zero_trigger(const linalg::Projector& complement) {
  const int dim = complement.ambient_dim();
  return TriggerFunction([dim](const std::vector<Vec>&) { return Vec::Zero(dim).eval(); },
                         complement);
}

TriggerFunction adaptive_trigger(TriggerFunction::Rule rule,
                                 const linalg::Projector& complement) {
  return TriggerFunction(std::move(rule), complement);
}

TriggeredTrajectory run_protocol(const envs::Mdp& env, const policies::Policy& policy,
                                 const TriggerFunction& trigger, int horizon, Rng& rng) {
  if (horizon < 1) throw InvalidInput("run_protocol: horizon must be at least 1");
  TriggeredTrajectory traj;
  traj.true_states.reserve(horizon);
  Vec state = env.initial_state(rng);
  for (int t = 0; t < horizon; ++t) {
    traj.true_states.push_back(state);
    const Vec f = trigger.apply(traj.true_states);
    const Vec perceived = state + f;
    const int action = policies::sample_action(policy, perceived, rng);
    // Transition and reward use the true state; only the agent sees the
    // perceived one.
    auto [next, reward] = env.step(state, action, rng);
    traj.perceived_states.push_back(perceived);
    traj.trigger_vectors.push_back(f);
    traj.actions.push_back(action);
    traj.rewards.push_back(reward);
    state = std::move(next);
  }
  return traj;
}

TriggeredTrajectory run_clean(const envs::Mdp& env, const policies::Policy& policy,
                              int horizon, Rng& rng) {
  if (horizon < 1) throw InvalidInput("run_clean: horizon must be at least 1");
  TriggeredTrajectory traj;
  Vec state = env.initial_state(rng);
  const Vec zero = Vec::Zero(env.state_dim());
  for (int t = 0; t < horizon; ++t) {
    traj.true_states.push_back(state);
    const int action = policies::sample_action(policy, state, rng);
    auto [next, reward] = env.step(state, action, rng);
    traj.perceived_states.push_back(state);
    traj.trigger_vectors.push_back(zero);
    traj.actions.push_back(action);
    traj.rewards.push_back(reward);
    state = std::move(next);
  }
  return traj;
}

double estimate_B(const envs::Mdp& env, const policies::Policy& policy,
                  const TriggerFunction& trigger, int rollouts, int horizon, Rng& rng) {
  if (rollouts < 1) throw InvalidInput("estimate_B: need at least one rollout");
  std::vector<double> norm_sums(horizon, 0.0);
  for (int r = 0; r < rollouts; ++r) {
    const TriggeredTrajectory traj = run_protocol(env, policy, trigger, horizon, rng);
    for (int t = 0; t < horizon; ++t) norm_sums[t] += traj.perceived_states[t].norm();
  }
  double best = 0.0;
  for (double s : norm_sums) best = std::max(best, s / rollouts);
  return best;
}

namespace {
std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

void write_jsonl(const TriggeredTrajectory& traj, std::ostream& out) {
  for (std::size_t t = 0; t < traj.length(); ++t) {
    nlohmann::json record{{"t", t},
                          {"true_state", to_std(traj.true_states[t])},
                          {"perceived_state", to_std(traj.perceived_states[t])},
                          {"action", traj.actions[t]},
                          {"reward", traj.rewards[t]},
                          {"trigger", to_std(traj.trigger_vectors[t])}};
    out << record.dump() << '\n';
  }
}

TriggeredTrajectory read_jsonl(std::istream& in) {
  TriggeredTrajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json record = nlohmann::json::parse(line);
    traj.true_states.push_back(from_std(record.at("true_state").get<std::vector<double>>()));
    traj.perceived_states.push_back(
        from_std(record.at("perceived_state").get<std::vector<double>>()));
    traj.actions.push_back(record.at("action").get<int>());
    traj.rewards.push_back(record.at("reward").get<double>());
    traj.trigger_vectors.push_back(from_std(record.at("trigger").get<std::vector<double>>()));
  }
  return traj;
}

}  // namespace subsan::attack
