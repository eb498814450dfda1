#pragma once

#include <memory>
#include <vector>

#include "subsan/linalg.hpp"
#include "subsan/rng.hpp"

namespace subsan::envs {

using linalg::Mat;
using linalg::Vec;

struct StepResult {
  Vec next_state;
  double reward = 0.0;
};

/// Discounted MDP with continuous states in R^D and a finite action set.
/// Implementations are immutable; all randomness comes from the caller's rng.
class Mdp {
 public:
  virtual ~Mdp() = default;
  virtual int state_dim() const = 0;
  virtual int action_count() const = 0;
  virtual double discount() const = 0;
  virtual Vec initial_state(Rng& rng) const = 0;
  virtual StepResult step(const Vec& state, int action, Rng& rng) const = 0;
};

/// Finite-state MDP with explicit transition/reward tables, embedded in R^D
/// through per-state coordinate vectors. Supports exact policy evaluation.
class TabularMdp final : public Mdp {
 public:
  TabularMdp(std::vector<Vec> states, std::vector<Mat> transition,
             Mat rewards, Vec initial_dist, double discount);

  int state_dim() const override { return static_cast<int>(states_.front().size()); }
  int action_count() const override { return static_cast<int>(transition_.size()); }
  double discount() const override { return discount_; }
  Vec initial_state(Rng& rng) const override;
  StepResult step(const Vec& state, int action, Rng& rng) const override;

  int num_states() const { return static_cast<int>(states_.size()); }
  const std::vector<Vec>& states() const { return states_; }
  /// P[a](i, j) = P(s_j | s_i, a)
  const std::vector<Mat>& transition() const { return transition_; }
  /// R(i, a)
  const Mat& rewards() const { return rewards_; }
  const Vec& initial_dist() const { return initial_dist_; }

  /// Nearest tabulated state in Euclidean distance (ties -> lowest index,
  /// which is the lexicographically smallest coordinate by construction).
  int nearest_state(const Vec& s) const;

 private:
  std::vector<Vec> states_;
  std::vector<Mat> transition_;
  Mat rewards_;
  Vec initial_dist_;
  double discount_;
};

/// Two-row six-state MDP in R^2. Bottom row E=(-1,0), F=(0,0), G=(1,0) is
/// reachable; top row A=(-1,h), B=(0,h), C=(1,h) is only ever perceived,
/// never occupied. Actions: 0 = left, 1 = right. Start state is always F.
struct ToyMdpSpec {
  double discount = 0.9;
  double trigger_height = 2.0;  // offset of the top row along the complement axis
};

inline constexpr int kToyLeft = 0;
inline constexpr int kToyRight = 1;
// State indices in the tabular layout.
inline constexpr int kToyE = 0, kToyF = 1, kToyG = 2;
inline constexpr int kToyA = 3, kToyB = 4, kToyC = 5;

std::shared_ptr<const TabularMdp> toy_mdp(const ToyMdpSpec& spec);

/// Synthetic environment with a planted safe subspace: observed states are
/// s = U z + xi with latent z in R^d evolving under per-action drift plus
/// Gaussian noise with the requested eigenvalue profile, and xi drawn
/// uniformly in the complement ball of radius C0 (so the bounded-support
/// constraint holds per sample, not just in expectation).
///
/// Rewards are linear in the safe-subspace coordinates, clipped to [0,1]:
///   R(s, a) = clip01(reward_bias[a] + reward_gain * w_a . (U^T Proj_E s))
/// with w_a the a-th row of reward_weights. The last action defaults to an
/// always-zero-reward "bad" action for the attacker to target.
struct PlantedEnvSpec {
  int state_dim = 16;
  int safe_dim = 3;
  int action_count = 4;
  double discount = 0.9;
  Vec eigen_profile;          // length safe_dim, descending, positive
  Mat embedding;              // D x d orthonormal; empty -> first d canonical axes
  std::vector<Vec> drifts;    // per-action latent drift, empty -> all zero
  double noise_scale = 1.0;   // multiplies the latent noise covariance
  double complement_noise_bound = 0.0;  // C0
  Mat reward_weights;         // A x d; empty -> e_a rows for a < d, zero after
  Vec reward_bias;            // length A; empty -> 0.2 for all but last, 0 last
  double reward_gain = 0.3;
  std::uint64_t seed = 0;     // recorded so the env is reconstructible
};

class PlantedEnv final : public Mdp {
 public:
  explicit PlantedEnv(PlantedEnvSpec spec);

  int state_dim() const override { return spec_.state_dim; }
  int action_count() const override { return spec_.action_count; }
  double discount() const override { return spec_.discount; }
  Vec initial_state(Rng& rng) const override;
  StepResult step(const Vec& state, int action, Rng& rng) const override;

  const PlantedEnvSpec& spec() const { return spec_; }
  const Mat& embedding() const { return spec_.embedding; }
  const Mat& complement_basis() const { return complement_; }
  linalg::Projector safe_projector() const;
  /// Population covariance of the clean occupancy distribution.
  linalg::CovarianceEstimate true_covariance() const;
  /// Sum of eigenvalues outside the safe subspace.
  double complement_energy() const;
  double reward(const Vec& state, int action) const;

 private:
  Vec sample_state(int action_for_drift, Rng& rng) const;

  PlantedEnvSpec spec_;
  Mat complement_;        // D x (D - d)
  Vec noise_std_;         // per-latent-coordinate std deviations
};

std::shared_ptr<const PlantedEnv> planted_env(const PlantedEnvSpec& spec);

/// Convenience wrapper matching the environment-facing contract.
StepResult step(const Mdp& env, const Vec& state, int action, Rng& rng);

}  // namespace subsan::envs
