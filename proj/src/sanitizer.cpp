#include "subsan/sanitizer.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace subsan::sanitize {

CleanSampleSet collect_clean_samples(const envs::Mdp& env, const policies::Policy& policy,
                                     long n, SamplingMode mode, Rng& rng, int horizon) {
  if (n < 1) throw InvalidInput("collect_clean_samples: n must be at least 1");
  const double gamma = env.discount();
  CleanSampleSet set;
  set.mode = mode;
  set.samples.reserve(n);

  if (mode == SamplingMode::GeometricIid) {
    std::geometric_distribution<long> stopping(1.0 - gamma);  // support {0, 1, ...}
    for (long i = 0; i < n; ++i) {
      long stop = gamma == 0.0 ? 0 : stopping(rng);
      Vec state = env.initial_state(rng);
      for (long t = 0; t < stop; ++t) {
        const int action = policies::sample_action(policy, state, rng);
        state = env.step(state, action, rng).next_state;
      }
      set.samples.push_back(std::move(state));
      ++set.episodes_used;
    }
    return set;
  }

  if (horizon <= 0)
    horizon = std::max(1, static_cast<int>(std::ceil(2.0 / (1.0 - gamma))));
  while (static_cast<long>(set.samples.size()) < n) {
    Vec state = env.initial_state(rng);
    for (int t = 0; t < horizon && static_cast<long>(set.samples.size()) < n; ++t) {
      set.samples.push_back(state);
      const int action = policies::sample_action(policy, state, rng);
      state = env.step(state, action, rng).next_state;
    }
    ++set.episodes_used;
  }
  return set;
}

FitResult fit_safe_subspace(const CleanSampleSet& samples, const DimensionChoice& d,
                            bool center) {
  linalg::CovarianceEstimate cov = linalg::empirical_covariance(samples.samples, center);
  linalg::EigenModel model = linalg::eigendecompose(cov);
  int selected;
  if (std::holds_alternative<int>(d)) {
    selected = std::get<int>(d);
    if (selected < 1 || selected > model.dim())
      throw InvalidInput("fit_safe_subspace: explicit d out of range");
  } else {
    selected = linalg::select_dimension(model, std::get<linalg::DimensionStrategy>(d));
  }
  linalg::Projector proj = linalg::projector(model, selected);
  return {std::move(proj), std::move(model), cov.mean, selected};
}

SanitizedPolicy::SanitizedPolicy(policies::PolicyPtr inner, linalg::Projector projector,
                                 Vec mean)
    : inner_(std::move(inner)), projector_(std::move(projector)), mean_(std::move(mean)) {
  if (!inner_) throw InvalidInput("SanitizedPolicy: null inner policy");
  if (projector_.ambient_dim() != inner_->state_dim())
    throw DimensionMismatch("SanitizedPolicy: projector/policy dimension mismatch");
  if (mean_.size() == 0) mean_ = Vec::Zero(projector_.ambient_dim());
  if (mean_.size() != projector_.ambient_dim())
    throw DimensionMismatch("SanitizedPolicy: mean dimension mismatch");
}

Vec SanitizedPolicy::act(const Vec& state) const {
  return inner_->act(mean_ + projector_.matrix * (state - mean_));
}

std::shared_ptr<const SanitizedPolicy> sanitize(policies::PolicyPtr policy,
                                                linalg::Projector projector, Vec mean) {
  return std::make_shared<SanitizedPolicy>(std::move(policy), std::move(projector),
                                           std::move(mean));
}

void save_samples(const CleanSampleSet& set, std::ostream& out) {
  nlohmann::json states = nlohmann::json::array();
  for (const Vec& s : set.samples)
    states.push_back(std::vector<double>(s.data(), s.data() + s.size()));
  nlohmann::json j{{"samples", std::move(states)},
                   {"episodes_used", set.episodes_used},
                   {"sampling_mode",
                    set.mode == SamplingMode::GeometricIid ? "geometric_iid" : "correlated"}};
  out << j.dump(2) << '\n';
}

CleanSampleSet load_samples(std::istream& in) {
  nlohmann::json j;
  in >> j;
  CleanSampleSet set;
  set.episodes_used = j.at("episodes_used").get<long>();
  set.mode = j.at("sampling_mode").get<std::string>() == "correlated"
                 ? SamplingMode::Correlated
                 : SamplingMode::GeometricIid;
  for (const auto& row : j.at("samples")) {
    const auto v = row.get<std::vector<double>>();
    set.samples.push_back(
        Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (set.samples.empty()) throw InvalidInput("load_samples: empty sample file");
  return set;
}

}  // namespace subsan::sanitize
