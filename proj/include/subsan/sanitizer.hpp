#pragma once

#include <iosfwd>
#include <memory>
#include <variant>
#include <vector>

#include "subsan/environments.hpp"
#include "subsan/linalg.hpp"
#include "subsan/policies.hpp"
#include "subsan/rng.hpp"

namespace subsan::sanitize {

using linalg::Mat;
using linalg::Vec;

enum class SamplingMode { GeometricIid, Correlated };

/// States collected from clean (untriggered) rollouts of the backdoor policy.
struct CleanSampleSet {
  std::vector<Vec> samples;
  long episodes_used = 0;
  SamplingMode mode = SamplingMode::GeometricIid;
};

/// GeometricIid: one state per episode, taken at a Geometric(1 - gamma)
/// stopping time, which is an exact i.i.d. draw from the discounted occupancy.
/// Correlated: all states of consecutive episodes up to `horizon` steps,
/// truncated to n.
CleanSampleSet collect_clean_samples(const envs::Mdp& env, const policies::Policy& policy,
                                     long n, SamplingMode mode, Rng& rng, int horizon = 0);

/// Covariance -> eigendecomposition -> top-d projector. `d` may be explicit
/// or a spectrum-based selection strategy.
struct FitResult {
  linalg::Projector projector;
  linalg::EigenModel model;
  Vec mean;       // zero when centering is off
  int selected_d = 0;
};

using DimensionChoice = std::variant<int, linalg::DimensionStrategy>;

FitResult fit_safe_subspace(const CleanSampleSet& samples, const DimensionChoice& d,
                            bool center);

/// The deployment wrapper: act(s) = inner.act(mean + P (s - mean)).
class SanitizedPolicy final : public policies::Policy {
 public:
  SanitizedPolicy(policies::PolicyPtr inner, linalg::Projector projector, Vec mean);

  int state_dim() const override { return inner_->state_dim(); }
  int action_count() const override { return inner_->action_count(); }
  Vec act(const Vec& state) const override;

  const linalg::Projector& projector() const { return projector_; }
  const Vec& mean() const { return mean_; }
  const policies::PolicyPtr& inner() const { return inner_; }

 private:
  policies::PolicyPtr inner_;
  linalg::Projector projector_;
  Vec mean_;
};

std::shared_ptr<const SanitizedPolicy> sanitize(policies::PolicyPtr policy,
                                                linalg::Projector projector, Vec mean);

/// JSON persistence for sample sets so subspace sweeps can reuse them.
void save_samples(const CleanSampleSet& set, std::ostream& out);
CleanSampleSet load_samples(std::istream& in);

}  // namespace subsan::sanitize
