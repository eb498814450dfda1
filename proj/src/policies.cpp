#include "subsan/policies.hpp"

#include <algorithm>
#include <cmath>

namespace subsan::policies {

int sample_action(const Policy& policy, const Vec& state, Rng& rng) {
  const Vec probs = policy.act(state);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    u -= probs[a];
    if (u <= 0.0) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size() - 1);
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

Vec one_hot(int n, int index) {
  Vec v = Vec::Zero(n);
  v[index] = 1.0;
  return v;
}

}  // namespace

TabularLookupPolicy::TabularLookupPolicy(std::vector<Vec> anchors,
                                         std::vector<Vec> action_dists)
    : anchors_(std::move(anchors)), dists_(std::move(action_dists)) {
  if (anchors_.empty() || anchors_.size() != dists_.size())
    throw InvalidInput("TabularLookupPolicy: anchor/distribution count mismatch");
  for (const Vec& p : dists_) {
    if (std::abs(p.sum() - 1.0) > 1e-12 || (p.array() < 0.0).any())
      throw InvalidInput("TabularLookupPolicy: action distribution off the simplex");
  }
}

Vec TabularLookupPolicy::act(const Vec& state) const {
  if (state.size() != state_dim())
    throw DimensionMismatch("TabularLookupPolicy::act: state dimension mismatch");
  std::size_t best = 0;
  double best_dist = (anchors_[0] - state).squaredNorm();
  for (std::size_t i = 1; i < anchors_.size(); ++i) {
    const double dist = (anchors_[i] - state).squaredNorm();
    if (dist < best_dist || (dist == best_dist && lex_less(anchors_[i], anchors_[best]))) {
      best_dist = dist;
      best = i;
    }
  }
  return dists_[best];
}

PolicyPtr toy_optimal_policy(const envs::ToyMdpSpec& spec) {
  auto env = envs::toy_mdp(spec);
  std::vector<Vec> dists(env->num_states(), one_hot(2, envs::kToyLeft));
  return std::make_shared<TabularLookupPolicy>(env->states(), std::move(dists));
}

PolicyPtr toy_backdoor_policy(const envs::ToyMdpSpec& spec) {
  auto env = envs::toy_mdp(spec);
  std::vector<Vec> dists(env->num_states(), one_hot(2, envs::kToyLeft));
  // Matches the optimal policy on the reachable bottom row; top-row states
  // carry the backdoor "right" action (only B is forced, A and C follow).
  dists[envs::kToyA] = one_hot(2, envs::kToyRight);
  dists[envs::kToyB] = one_hot(2, envs::kToyRight);
  dists[envs::kToyC] = one_hot(2, envs::kToyRight);
  return std::make_shared<TabularLookupPolicy>(env->states(), std::move(dists));
}

namespace {

class PlantedCleanPolicy final : public Policy {
 public:
  PlantedCleanPolicy(std::shared_ptr<const envs::PlantedEnv> env, PlantedPolicyConfig config)
      : env_(std::move(env)), config_(config) {
    if (config_.temperature <= 0.0)
      throw InvalidInput("planted policy: temperature must be positive");
  }

  int state_dim() const override { return env_->state_dim(); }
  int action_count() const override { return env_->action_count(); }

  Vec act(const Vec& state) const override {
    if (state.size() != state_dim())
      throw DimensionMismatch("planted policy: state dimension mismatch");
    const auto& spec = env_->spec();
    const int A = spec.action_count;
    const int bad = config_.bad_action < 0 ? A - 1 : config_.bad_action;
    const Vec z = spec.embedding.transpose() * state;
    Vec scores(A);
    for (int a = 0; a < A; ++a) {
      scores[a] = a == bad ? config_.bad_action_score
                           : spec.reward_bias[a] +
                                 spec.reward_gain * spec.reward_weights.row(a).dot(z);
    }
    scores /= config_.temperature;
    const double m = scores.maxCoeff();
    Vec probs = (scores.array() - m).exp();
    probs /= probs.sum();
    return probs;
  }

 private:
  std::shared_ptr<const envs::PlantedEnv> env_;
  PlantedPolicyConfig config_;
};

}  // namespace

PolicyPtr planted_clean_policy(const std::shared_ptr<const envs::PlantedEnv>& env,
                               const PlantedPolicyConfig& config) {
  return std::make_shared<PlantedCleanPolicy>(env, config);
}

PlantedBackdoorPolicy::PlantedBackdoorPolicy(std::shared_ptr<const envs::PlantedEnv> env,
                                             PlantedPolicyConfig config)
    : env_(std::move(env)), config_(config) {
  if (config_.onset_margin <= 0.0)
    throw InvalidInput("planted backdoor policy: onset margin must be positive");
  bad_action_ = config_.bad_action < 0 ? env_->action_count() - 1 : config_.bad_action;
  if (bad_action_ < 0 || bad_action_ >= env_->action_count())
    throw InvalidInput("planted backdoor policy: bad action index out of range");
  config_.bad_action = bad_action_;
}

Vec PlantedBackdoorPolicy::clean_part(const Vec& state) const {
  return PlantedCleanPolicy(env_, config_).act(state);
}

double PlantedBackdoorPolicy::blend_weight(const Vec& state) const {
  const Mat& u = env_->embedding();
  const double complement_norm = (state - u * (u.transpose() * state)).norm();
  const double c0 = env_->spec().complement_noise_bound;
  return std::clamp((complement_norm - c0) / config_.onset_margin, 0.0, 1.0);
}

Vec PlantedBackdoorPolicy::act(const Vec& state) const {
  const double w = blend_weight(state);
  Vec probs = clean_part(state);
  if (w > 0.0) {
    probs *= 1.0 - w;
    probs[bad_action_] += w;
  }
  return probs;
}

double PlantedBackdoorPolicy::analytic_lipschitz_bound() const {
  const auto& spec = env_->spec();
  double max_row = 0.0;
  for (int a = 0; a < spec.action_count; ++a) {
    if (a == bad_action_) continue;
    max_row = std::max(max_row, spec.reward_weights.row(a).norm());
  }
  const double softmax_part = 2.0 * spec.reward_gain * max_row / config_.temperature;
  return softmax_part + 2.0 / config_.onset_margin;
}

std::shared_ptr<const PlantedBackdoorPolicy> planted_backdoor_policy(
    const std::shared_ptr<const envs::PlantedEnv>& env, const PlantedPolicyConfig& config) {
  return std::make_shared<PlantedBackdoorPolicy>(env, config);
}

LipschitzCertificate estimate_lipschitz(const Policy& policy, const SampleRegion& region,
                                        long probes, Rng& rng) {
  if (probes < 1) throw InvalidInput("estimate_lipschitz: need at least one probe");
  if (region.low.size() != region.high.size() || region.low.size() != policy.state_dim())
    throw DimensionMismatch("estimate_lipschitz: region dimension mismatch");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&] {
    Vec s(region.low.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
      s[i] = region.low[i] + (region.high[i] - region.low[i]) * unif(rng);
    return s;
  };
  LipschitzCertificate cert;
  long usable = 0;
  for (long p = 0; p < probes; ++p) {
    const Vec a = draw();
    const Vec b = draw();
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;  // degenerate pair, skip
    ++usable;
    const double ratio = (policy.act(a) - policy.act(b)).lpNorm<1>() / dist;
    if (ratio > cert.estimated_lower_bound) {
      cert.estimated_lower_bound = ratio;
      cert.witness_a = a;
      cert.witness_b = b;
    }
  }
  if (usable == 0) throw InvalidInput("estimate_lipschitz: all probe pairs degenerate");
  cert.probe_count = usable;
  return cert;
}

}  // namespace subsan::policies
