#pragma once

#include <memory>
#include <vector>

#include "subsan/environments.hpp"
#include "subsan/linalg.hpp"
#include "subsan/rng.hpp"

namespace subsan::policies {

using linalg::Mat;
using linalg::Vec;

/// Maps a state to a probability vector over actions. Implementations are
/// immutable; act() is pure.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int state_dim() const = 0;
  virtual int action_count() const = 0;
  virtual Vec act(const Vec& state) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

int sample_action(const Policy& policy, const Vec& state, Rng& rng);

/// Exact-state lookup policy over a finite table of anchor states. Off-table
/// inputs resolve to the nearest anchor in Euclidean distance with
/// lexicographic tie-breaking, so projected (off-grid) states stay
/// deterministic.
class TabularLookupPolicy final : public Policy {
 public:
  TabularLookupPolicy(std::vector<Vec> anchors, std::vector<Vec> action_dists);

  int state_dim() const override { return static_cast<int>(anchors_.front().size()); }
  int action_count() const override { return static_cast<int>(dists_.front().size()); }
  Vec act(const Vec& state) const override;

 private:
  std::vector<Vec> anchors_;
  std::vector<Vec> dists_;
};

/// The clean-optimal policy on the toy MDP: left at E and F (and everywhere
/// else, where the choice is value-neutral).
PolicyPtr toy_optimal_policy(const envs::ToyMdpSpec& spec);

/// The attacker's policy on the toy MDP: matches the optimal policy on the
/// reachable bottom row, takes "right" on the perceived-only top row.
PolicyPtr toy_backdoor_policy(const envs::ToyMdpSpec& spec);

struct PlantedPolicyConfig {
  double temperature = 0.25;   // softmax temperature of the clean part
  int bad_action = -1;         // -1 -> last action
  double bad_action_score = -2.0;
  double onset_margin = 0.5;   // ramp width of the blend weight
};

/// Softmax-of-linear-scores policy aligned with the planted env's reward,
/// acting on the safe-subspace coordinates of the input.
PolicyPtr planted_clean_policy(const std::shared_ptr<const envs::PlantedEnv>& env,
                               const PlantedPolicyConfig& config);

/// Backdoor policy for the planted env: equals the clean policy wherever the
/// complement norm of the state is within the clean support bound C0, and
/// ramps linearly to a one-hot on `bad_action` once the complement norm
/// exceeds C0 + onset_margin.
class PlantedBackdoorPolicy final : public Policy {
 public:
  PlantedBackdoorPolicy(std::shared_ptr<const envs::PlantedEnv> env,
                        PlantedPolicyConfig config);

  int state_dim() const override { return env_->state_dim(); }
  int action_count() const override { return env_->action_count(); }
  Vec act(const Vec& state) const override;

  Vec clean_part(const Vec& state) const;
  double blend_weight(const Vec& state) const;
  int bad_action() const { return bad_action_; }
  /// L_softmax + 2/onset_margin with L_softmax = 2 * gain * max_a ||w_a|| / tau.
  double analytic_lipschitz_bound() const;

 private:
  std::shared_ptr<const envs::PlantedEnv> env_;
  PlantedPolicyConfig config_;
  int bad_action_;
};

std::shared_ptr<const PlantedBackdoorPolicy> planted_backdoor_policy(
    const std::shared_ptr<const envs::PlantedEnv>& env, const PlantedPolicyConfig& config);

/// Axis-aligned box to draw probe states from.
struct SampleRegion {
  Vec low;
  Vec high;
};

/// Empirical lower bound on the Lipschitz constant
/// max ||pi(s) - pi(s')||_1 / ||s - s'||_2 over sampled pairs.
struct LipschitzCertificate {
  double estimated_lower_bound = 0.0;
  long probe_count = 0;
  Vec witness_a;
  Vec witness_b;
};

LipschitzCertificate estimate_lipschitz(const Policy& policy, const SampleRegion& region,
                                        long probes, Rng& rng);

}  // namespace subsan::policies
