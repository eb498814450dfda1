#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "subsan/environments.hpp"
#include "subsan/linalg.hpp"
#include "subsan/policies.hpp"
#include "subsan/rng.hpp"

namespace subsan::attack {

using linalg::Mat;
using linalg::Vec;

/// Adaptive trigger: maps the true-state history s_{0:t} to a perturbation
/// restricted to the complement of the safe subspace. Every emission is
/// checked against the safe projector; a vector with safe-subspace component
/// above 1e-10 raises InvalidTrigger.
class TriggerFunction {
 public:
  using Rule = std::function<Vec(const std::vector<Vec>& history)>;

  TriggerFunction(Rule rule, linalg::Projector complement);

  /// Trigger for the current step, given history s_0..s_t (s_t last).
  Vec apply(const std::vector<Vec>& history) const;

  const linalg::Projector& target_complement() const { return complement_; }
  int state_dim() const { return complement_.ambient_dim(); }

 private:
  Rule rule_;
  linalg::Projector complement_;  // projector onto E-perp
  Mat safe_matrix_;               // I - complement, used for the membership check
};

/// f(history) = magnitude * direction with a fixed unit direction in E-perp.
TriggerFunction constant_trigger(const Vec& direction, double magnitude,
                                 const linalg::Projector& complement);

/// f identically zero; the protocol reduces to a clean rollout.
TriggerFunction zero_trigger(const linalg::Projector& complement);

/// Wraps an arbitrary history rule with the complement membership check.
TriggerFunction adaptive_trigger(TriggerFunction::Rule rule,
                                 const linalg::Projector& complement);

/// One backdoored interaction: the agent acted on perceived states while the
/// environment evolved on true states.
struct TriggeredTrajectory {
  std::vector<Vec> true_states;
  std::vector<Vec> perceived_states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<Vec> trigger_vectors;

  std::size_t length() const { return true_states.size(); }
};

/// Backdoored interaction protocol: s_0 ~ mu; at each step the trigger is
/// computed from the true-state history, the agent acts on s_t + f(s_{0:t}),
/// and the environment transitions and rewards on the true (s_t, a_t).
TriggeredTrajectory run_protocol(const envs::Mdp& env, const policies::Policy& policy,
                                 const TriggerFunction& trigger, int horizon, Rng& rng);

/// Clean rollout (no trigger), same record format.
TriggeredTrajectory run_clean(const envs::Mdp& env, const policies::Policy& policy,
                              int horizon, Rng& rng);

/// Monte-Carlo estimate of the perceived-state norm bound: the maximum over
/// t < horizon of the mean of ||s_t + f(s_{0:t})||_2 across rollouts.
double estimate_B(const envs::Mdp& env, const policies::Policy& policy,
                  const TriggerFunction& trigger, int rollouts, int horizon, Rng& rng);

/// One JSON record per timestep: t, true_state, perceived_state, action,
/// reward, trigger.
void write_jsonl(const TriggeredTrajectory& traj, std::ostream& out);
TriggeredTrajectory read_jsonl(std::istream& in);

}  // namespace subsan::attack
