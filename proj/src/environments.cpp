#include "subsan/environments.hpp"

#include <algorithm>
#include <cmath>

namespace subsan::envs {

TabularMdp::TabularMdp(std::vector<Vec> states, std::vector<Mat> transition,
                       Mat rewards, Vec initial_dist, double discount)
    : states_(std::move(states)),
      transition_(std::move(transition)),
      rewards_(std::move(rewards)),
      initial_dist_(std::move(initial_dist)),
      discount_(discount) {
  if (states_.empty()) throw InvalidInput("TabularMdp: no states");
  if (discount_ < 0.0 || discount_ >= 1.0)
    throw InvalidInput("TabularMdp: discount must lie in [0, 1)");
  const auto n = static_cast<Eigen::Index>(states_.size());
  for (const Mat& p : transition_) {
    if (p.rows() != n || p.cols() != n)
      throw DimensionMismatch("TabularMdp: transition matrix shape mismatch");
  }
  if (rewards_.rows() != n || rewards_.cols() != static_cast<Eigen::Index>(transition_.size()))
    throw DimensionMismatch("TabularMdp: reward table shape mismatch");
  if ((rewards_.array() < 0.0).any() || (rewards_.array() > 1.0).any())
    throw InvalidInput("TabularMdp: rewards must lie in [0, 1]");
  if (initial_dist_.size() != n)
    throw DimensionMismatch("TabularMdp: initial distribution length mismatch");
}

namespace {
int sample_categorical(const Vec& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}
}  // namespace

Vec TabularMdp::initial_state(Rng& rng) const {
  return states_[sample_categorical(initial_dist_, rng)];
}

StepResult TabularMdp::step(const Vec& state, int action, Rng& rng) const {
  if (action < 0 || action >= action_count())
    throw InvalidInput("TabularMdp::step: invalid action index");
  if (state.size() != state_dim())
    throw DimensionMismatch("TabularMdp::step: state dimension mismatch");
  const int i = nearest_state(state);
  const int j = sample_categorical(transition_[action].row(i).transpose(), rng);
  return {states_[j], rewards_(i, action)};
}

namespace {
bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}
}  // namespace

int TabularMdp::nearest_state(const Vec& s) const {
  int best = 0;
  double best_dist = (states_[0] - s).squaredNorm();
  for (int i = 1; i < num_states(); ++i) {
    const double dist = (states_[i] - s).squaredNorm();
    if (dist < best_dist ||
        (dist == best_dist && lex_less(states_[i], states_[best]))) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

std::shared_ptr<const TabularMdp> toy_mdp(const ToyMdpSpec& spec) {
  if (spec.trigger_height <= 0.0) throw InvalidInput("toy_mdp: trigger height must be positive");
  if (spec.discount <= 0.0 || spec.discount >= 1.0)
    throw InvalidInput("toy_mdp: discount must lie in (0, 1)");
  const double h = spec.trigger_height;
  std::vector<Vec> states(6);
  states[kToyE] = Vec{{-1.0, 0.0}};
  states[kToyF] = Vec{{0.0, 0.0}};
  states[kToyG] = Vec{{1.0, 0.0}};
  states[kToyA] = Vec{{-1.0, h}};
  states[kToyB] = Vec{{0.0, h}};
  states[kToyC] = Vec{{1.0, h}};

  // Deterministic transitions. Left at E self-loops with reward 1, left at F
  // moves to E with reward 0, right at F moves to the absorbing sink G with
  // reward 1. Top-row states mirror their bottom counterparts but land in the
  // bottom row; they are never occupied under the interaction protocol.
  Mat left = Mat::Zero(6, 6), right = Mat::Zero(6, 6);
  Mat rewards = Mat::Zero(6, 2);

  auto bottom_of = [](int i) { return i >= 3 ? i - 3 : i; };
  for (int i = 0; i < 6; ++i) {
    const int b = bottom_of(i);
    if (b == kToyE) {
      left(i, kToyE) = 1.0;
      right(i, kToyF) = 1.0;
      rewards(i, kToyLeft) = 1.0;
    } else if (b == kToyF) {
      left(i, kToyE) = 1.0;
      right(i, kToyG) = 1.0;
      rewards(i, kToyRight) = 1.0;
    } else {  // G: absorbing, zero reward
      left(i, kToyG) = 1.0;
      right(i, kToyG) = 1.0;
    }
  }

  Vec initial = Vec::Zero(6);
  initial[kToyF] = 1.0;  // the start state is always F

  return std::make_shared<TabularMdp>(std::move(states), std::vector<Mat>{left, right},
                                      std::move(rewards), std::move(initial), spec.discount);
}

PlantedEnv::PlantedEnv(PlantedEnvSpec spec) : spec_(std::move(spec)) {
  const int D = spec_.state_dim;
  const int d = spec_.safe_dim;
  const int A = spec_.action_count;
  if (D < 1 || d < 1 || d > D) throw InvalidInput("PlantedEnv: need 1 <= d <= D");
  if (A < 2) throw InvalidInput("PlantedEnv: need at least two actions");
  if (spec_.discount < 0.0 || spec_.discount >= 1.0)
    throw InvalidInput("PlantedEnv: discount must lie in [0, 1)");
  if (spec_.complement_noise_bound < 0.0)
    throw InvalidInput("PlantedEnv: complement noise bound must be nonnegative");

  if (spec_.eigen_profile.size() == 0) {
    spec_.eigen_profile = Vec(d);
    for (int i = 0; i < d; ++i) spec_.eigen_profile[i] = std::pow(2.0, d - 1 - i);
  }
  if (spec_.eigen_profile.size() != d)
    throw DimensionMismatch("PlantedEnv: eigenvalue profile length != safe_dim");
  for (int i = 0; i < d; ++i) {
    if (spec_.eigen_profile[i] <= 0.0)
      throw InvalidInput("PlantedEnv: eigenvalue profile must be positive");
    if (i > 0 && spec_.eigen_profile[i] > spec_.eigen_profile[i - 1])
      throw InvalidInput("PlantedEnv: eigenvalue profile must be non-increasing");
  }

  if (spec_.embedding.size() == 0) {
    spec_.embedding = Mat::Identity(D, D).leftCols(d);
  }
  if (spec_.embedding.rows() != D || spec_.embedding.cols() != d)
    throw DimensionMismatch("PlantedEnv: embedding shape must be D x d");
  const Mat gram = spec_.embedding.transpose() * spec_.embedding;
  if ((gram - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidInput("PlantedEnv: embedding columns must be orthonormal");

  if (spec_.drifts.empty()) spec_.drifts.assign(A, Vec::Zero(d));
  if (static_cast<int>(spec_.drifts.size()) != A)
    throw DimensionMismatch("PlantedEnv: need one drift vector per action");
  for (const Vec& v : spec_.drifts) {
    if (v.size() != d) throw DimensionMismatch("PlantedEnv: drift vector length != safe_dim");
  }

  if (spec_.reward_weights.size() == 0) {
    spec_.reward_weights = Mat::Zero(A, d);
    for (int a = 0; a < A - 1 && a < d; ++a) spec_.reward_weights(a, a) = 1.0;
  }
  if (spec_.reward_weights.rows() != A || spec_.reward_weights.cols() != d)
    throw DimensionMismatch("PlantedEnv: reward weight shape must be A x d");
  if (spec_.reward_bias.size() == 0) {
    spec_.reward_bias = Vec::Constant(A, 0.2);
    spec_.reward_bias[A - 1] = 0.0;  // the attacker's target action pays nothing
  }
  if (spec_.reward_bias.size() != A)
    throw DimensionMismatch("PlantedEnv: reward bias length != action count");

  complement_ = d < D ? linalg::orthonormal_complement(spec_.embedding) : Mat(D, 0);
  noise_std_ = (spec_.noise_scale * spec_.eigen_profile).cwiseSqrt();
}

Vec PlantedEnv::sample_state(int action_for_drift, Rng& rng) const {
  const int D = spec_.state_dim;
  const int d = spec_.safe_dim;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(d);
  for (int i = 0; i < d; ++i) z[i] = noise_std_[i] * gauss(rng);
  if (action_for_drift >= 0) z += spec_.drifts[action_for_drift];

  Vec s = spec_.embedding * z;
  const int m = D - d;
  if (m > 0 && spec_.complement_noise_bound > 0.0) {
    // Uniform in the complement ball of radius C0: isotropic direction times
    // radius C0 * u^(1/m).
    Vec g(m);
    for (int i = 0; i < m; ++i) g[i] = gauss(rng);
    const double norm = g.norm();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double radius =
        spec_.complement_noise_bound * std::pow(unif(rng), 1.0 / static_cast<double>(m));
    if (norm > 0.0) s += complement_ * (g * (radius / norm));
  }
  return s;
}

Vec PlantedEnv::initial_state(Rng& rng) const { return sample_state(-1, rng); }

StepResult PlantedEnv::step(const Vec& state, int action, Rng& rng) const {
  if (action < 0 || action >= spec_.action_count)
    throw InvalidInput("PlantedEnv::step: invalid action index");
  if (state.size() != spec_.state_dim)
    throw DimensionMismatch("PlantedEnv::step: state dimension mismatch");
  const double r = reward(state, action);
  return {sample_state(action, rng), r};
}

double PlantedEnv::reward(const Vec& state, int action) const {
  const Vec z = spec_.embedding.transpose() * state;  // safe-subspace coordinates
  const double raw =
      spec_.reward_bias[action] + spec_.reward_gain * spec_.reward_weights.row(action).dot(z);
  return std::clamp(raw, 0.0, 1.0);
}

linalg::Projector PlantedEnv::safe_projector() const {
  return linalg::projector_from_basis(spec_.embedding);
}

linalg::CovarianceEstimate PlantedEnv::true_covariance() const {
  const int D = spec_.state_dim;
  const int d = spec_.safe_dim;
  Mat cov = spec_.embedding *
            (spec_.noise_scale * spec_.eigen_profile).asDiagonal() *
            spec_.embedding.transpose();
  const int m = D - d;
  if (m > 0 && spec_.complement_noise_bound > 0.0) {
    // Uniform ball of radius C0 in m dims has per-coordinate variance
    // C0^2 / (m + 2).
    const double var = spec_.complement_noise_bound * spec_.complement_noise_bound /
                       static_cast<double>(m + 2);
    cov += var * complement_ * complement_.transpose();
  }
  cov = (0.5 * (cov + cov.transpose())).eval();
  return {std::move(cov), 0, Vec::Zero(D)};
}

double PlantedEnv::complement_energy() const {
  const int m = spec_.state_dim - spec_.safe_dim;
  if (m <= 0 || spec_.complement_noise_bound == 0.0) return 0.0;
  const double var = spec_.complement_noise_bound * spec_.complement_noise_bound /
                     static_cast<double>(m + 2);
  return var * m;
}

std::shared_ptr<const PlantedEnv> planted_env(const PlantedEnvSpec& spec) {
  return std::make_shared<PlantedEnv>(spec);
}

StepResult step(const Mdp& env, const Vec& state, int action, Rng& rng) {
  return env.step(state, action, rng);
}

}  // namespace subsan::envs
