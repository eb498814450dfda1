#include <doctest.h>

#include "subsan/environments.hpp"
#include "subsan/policies.hpp"
#include "subsan/rng.hpp"

using namespace subsan;
using linalg::Mat;
using linalg::Vec;

namespace {

std::shared_ptr<const envs::PlantedEnv> small_planted(double c0) {
  envs::PlantedEnvSpec spec;
  spec.state_dim = 6;
  spec.safe_dim = 2;
  spec.action_count = 3;
  spec.complement_noise_bound = c0;
  return envs::planted_env(spec);
}

}  // namespace

TEST_CASE("toy backdoor policy action table") {
  auto env = envs::toy_mdp({});
  auto pi = policies::toy_backdoor_policy({});
  const auto& s = env->states();
  CHECK(pi->act(s[envs::kToyF])[envs::kToyLeft] == 1.0);
  CHECK(pi->act(s[envs::kToyE])[envs::kToyLeft] == 1.0);
  CHECK(pi->act(s[envs::kToyB])[envs::kToyRight] == 1.0);
  CHECK(pi->act(s[envs::kToyA])[envs::kToyRight] == 1.0);
  // a perceived state F + (0, h) lands exactly on B
  Vec lifted = s[envs::kToyF];
  lifted[1] += 2.0;
  CHECK((pi->act(lifted) - pi->act(s[envs::kToyB])).norm() == 0.0);
}

TEST_CASE("toy optimal policy always goes left") {
  auto env = envs::toy_mdp({});
  auto pi = policies::toy_optimal_policy({});
  for (const Vec& s : env->states()) CHECK(pi->act(s)[envs::kToyLeft] == 1.0);
}

TEST_CASE("toy policies agree on the reachable bottom row") {
  auto env = envs::toy_mdp({});
  auto opt = policies::toy_optimal_policy({});
  auto bad = policies::toy_backdoor_policy({});
  for (int i : {envs::kToyE, envs::kToyF, envs::kToyG})
    CHECK((opt->act(env->states()[i]) - bad->act(env->states()[i])).norm() == 0.0);
}

TEST_CASE("lookup policy validates simplex rows") {
  Vec anchor = Vec::Zero(1);
  Vec off(2);
  off << 0.6, 0.5;
  CHECK_THROWS_AS(policies::TabularLookupPolicy({anchor}, {off}), InvalidInput);
}

TEST_CASE("toy backdoor gap between F and B matches the height ratio") {
  auto env = envs::toy_mdp({});
  auto pi = policies::toy_backdoor_policy({});
  const Vec f = env->states()[envs::kToyF];
  const Vec b = env->states()[envs::kToyB];
  const double ratio = (pi->act(f) - pi->act(b)).lpNorm<1>() / (f - b).norm();
  CHECK(ratio == doctest::Approx(1.0));  // 2 / h with h = 2
}

TEST_CASE("planted policies emit probability vectors") {
  auto env = small_planted(0.3);
  auto clean = policies::planted_clean_policy(env, {});
  auto backdoor = policies::planted_backdoor_policy(env, {});
  Rng rng = make_rng(71);
  for (int t = 0; t < 500; ++t) {
    Vec s = env->initial_state(rng);
    s += 0.01 * t * Vec::Ones(6);  // push off-distribution too
    for (const auto& pi : {clean, policies::PolicyPtr(backdoor)}) {
      Vec p = pi->act(s);
      CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(p.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("backdoor equals the clean policy on the clean support") {
  auto env = small_planted(0.3);
  auto clean = policies::planted_clean_policy(env, {});
  auto backdoor = policies::planted_backdoor_policy(env, {});
  Rng rng = make_rng(73);
  double max_tv = 0.0;
  for (int t = 0; t < 10000; ++t) {
    Vec s = env->initial_state(rng);  // complement norm <= C0 by construction
    max_tv = std::max(max_tv, 0.5 * (clean->act(s) - backdoor->act(s)).lpNorm<1>());
  }
  CHECK(max_tv == 0.0);
}

TEST_CASE("backdoor saturates to the bad action far in the complement") {
  auto env = small_planted(0.1);
  policies::PlantedPolicyConfig cfg;
  cfg.onset_margin = 0.5;
  auto pi = policies::planted_backdoor_policy(env, cfg);
  Vec s = Vec::Zero(6);
  s += 5.0 * env->complement_basis().col(0);
  CHECK(pi->blend_weight(s) == 1.0);
  Vec p = pi->act(s);
  CHECK(p[pi->bad_action()] == doctest::Approx(1.0));
}

TEST_CASE("blend weight ramps linearly past the support bound") {
  auto env = small_planted(0.2);
  policies::PlantedPolicyConfig cfg;
  cfg.onset_margin = 0.5;
  auto pi = policies::planted_backdoor_policy(env, cfg);
  Vec dir = env->complement_basis().col(0);
  CHECK(pi->blend_weight(0.1 * dir) == 0.0);
  CHECK(pi->blend_weight(0.45 * dir) == doctest::Approx(0.5));
  CHECK(pi->blend_weight(0.7 * dir) == doctest::Approx(1.0));
}

TEST_CASE("lipschitz probe estimate stays below the analytic bound") {
  auto env = small_planted(0.2);
  auto pi = policies::planted_backdoor_policy(env, {});
  policies::SampleRegion region{Vec::Constant(6, -2.0), Vec::Constant(6, 2.0)};
  Rng rng = make_rng(79);
  auto cert = policies::estimate_lipschitz(*pi, region, 5000, rng);
  CHECK(cert.probe_count > 0);
  CHECK(cert.estimated_lower_bound > 0.0);
  CHECK(cert.estimated_lower_bound <= pi->analytic_lipschitz_bound());
}

TEST_CASE("lipschitz estimate of a constant policy is zero") {
  auto pi = policies::toy_optimal_policy({});  // one-hot left everywhere
  policies::SampleRegion region{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  Rng rng = make_rng(83);
  auto cert = policies::estimate_lipschitz(*pi, region, 200, rng);
  CHECK(cert.estimated_lower_bound == 0.0);
}

TEST_CASE("lipschitz estimation rejects a degenerate region") {
  auto pi = policies::toy_optimal_policy({});
  policies::SampleRegion region{Vec::Zero(2), Vec::Zero(2)};
  Rng rng = make_rng(89);
  CHECK_THROWS_AS(policies::estimate_lipschitz(*pi, region, 50, rng), InvalidInput);
}
