#include <catch_amalgamated.hpp>

#include "fasopt/scenario.hpp"

using namespace fasopt;

namespace {
bool scenarios_equal(const ChannelScenario& a, const ChannelScenario& b) {
  if (a.n_users() != b.n_users()) return false;
  for (int k = 0; k < a.n_users(); ++k) {
    const auto& ga = a.geometry[k];
    const auto& gb = b.geometry[k];
    if ((ga.theta_t != gb.theta_t).any() || (ga.phi_t != gb.phi_t).any()) return false;
    if ((ga.theta_r != gb.theta_r).any() || (ga.phi_r != gb.phi_r).any()) return false;
    if (ga.user_pos != gb.user_pos || ga.distance_m != gb.distance_m) return false;
    if (a.path_response[k] != b.path_response[k]) return false;
  }
  return true;
}
}  // namespace

TEST_CASE("same seed gives a bit-identical scenario") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario a = sample_scenario(cfg, 7);
  ChannelScenario b = sample_scenario(cfg, 7);
  CHECK(scenarios_equal(a, b));
  ChannelScenario c = sample_scenario(cfg, 8);
  CHECK_FALSE(scenarios_equal(a, c));
}

TEST_CASE("angles and geometry stay in their ranges") {
  SystemConfig cfg = load_config("{}");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ChannelScenario sc = sample_scenario(cfg, seed);
    for (const PathGeometry& g : sc.geometry) {
      CHECK(g.distance_m > 0.0);
      CHECK((g.theta_t >= 0.0).all());
      CHECK((g.theta_t <= kPi).all());
      CHECK((g.phi_t >= 0.0).all());
      CHECK((g.phi_t <= kPi).all());
      CHECK(g.user_pos.x() >= 20.0);
      CHECK(g.user_pos.x() <= 40.0);
      CHECK(g.user_pos.y() >= -20.0);
      CHECK(g.user_pos.y() <= 0.0);
    }
    for (const CMat& sigma : sc.path_response) {
      // Only the diagonal is populated by the sampler.
      CHECK((sigma - CMat(sigma.diagonal().asDiagonal())).norm() == 0.0);
    }
  }
}

TEST_CASE("path response variance matches the pathloss law") {
  // Monte-Carlo estimate of E|Sigma[l,l]|^2 against g0 (d/d0)^-alpha / L.
  SystemConfig cfg = load_config("{}");
  const int n_seeds = 4000;
  double sum = 0.0;
  double sum_sq = 0.0;
  double expected_acc = 0.0;
  int count = 0;
  for (int seed = 0; seed < n_seeds; ++seed) {
    ChannelScenario sc = sample_scenario(cfg, static_cast<std::uint64_t>(seed) + 1000);
    for (int k = 0; k < sc.n_users(); ++k) {
      const double var =
          cfg.ref_gain * std::pow(sc.geometry[k].distance_m, -cfg.pathloss_exponent) / cfg.n_paths;
      for (int l = 0; l < cfg.n_paths; ++l) {
        const double ratio = std::norm(sc.path_response[k](l, l)) / var;
        sum += ratio;
        sum_sq += ratio * ratio;
        expected_acc += 1.0;
        ++count;
      }
    }
  }
  const double mean = sum / count;
  const double se = std::sqrt((sum_sq / count - mean * mean) / count);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}
