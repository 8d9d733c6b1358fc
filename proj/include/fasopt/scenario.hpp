#pragma once

#include <vector>

#include "fasopt/common.hpp"
#include "fasopt/config.hpp"
#include "fasopt/rng.hpp"

namespace fasopt {

/// Per-user propagation geometry: departure/arrival angle pairs for each path
/// and the BS-to-user distance.
struct PathGeometry {
  Eigen::ArrayXd theta_t;  // elevation AoD per path, in [0, pi]
  Eigen::ArrayXd phi_t;    // azimuth AoD per path, in [0, pi]
  Eigen::ArrayXd theta_r;  // elevation AoA per path
  Eigen::ArrayXd phi_r;    // azimuth AoA per path
  Vec2 user_pos = Vec2::Zero();  // meters, BS at the origin
  double distance_m = 0.0;
};

/// A channel realization: geometry plus the path-response matrix per user.
/// The sampler fills only the diagonal (independent per-path responses); the
/// general square form is kept so assembled channels accept either.
struct ChannelScenario {
  std::vector<PathGeometry> geometry;
  std::vector<CMat> path_response;  // Sigma_k, L x L

  int n_users() const { return static_cast<int>(geometry.size()); }
  int n_paths() const { return static_cast<int>(geometry.front().theta_t.size()); }
};

/// Draws a channel realization. Deterministic: the same (cfg, seed) yields a
/// bit-identical scenario regardless of host or thread count. User k consumes
/// stream k of the generator, so realizations are stable under changes that
/// do not touch that user's draws.
inline ChannelScenario sample_scenario(const SystemConfig& cfg, std::uint64_t seed) {
  const int K = cfg.n_users;
  const int L = cfg.n_paths;
  const double x0 = std::min(cfg.user_area_m[0][0], cfg.user_area_m[1][0]);
  const double x1 = std::max(cfg.user_area_m[0][0], cfg.user_area_m[1][0]);
  const double y0 = std::min(cfg.user_area_m[0][1], cfg.user_area_m[1][1]);
  const double y1 = std::max(cfg.user_area_m[0][1], cfg.user_area_m[1][1]);

  ChannelScenario sc;
  sc.geometry.resize(static_cast<std::size_t>(K));
  sc.path_response.resize(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    Pcg32 rng(seed, static_cast<std::uint64_t>(k));
    PathGeometry& g = sc.geometry[static_cast<std::size_t>(k)];
    g.user_pos = Vec2(rng.uniform(x0, x1), rng.uniform(y0, y1));
    g.distance_m = g.user_pos.norm();
    g.theta_t.resize(L);
    g.phi_t.resize(L);
    g.theta_r.resize(L);
    g.phi_r.resize(L);
    for (int l = 0; l < L; ++l) {
      g.theta_t[l] = rng.uniform(0.0, kPi);
      g.phi_t[l] = rng.uniform(0.0, kPi);
    }
    for (int l = 0; l < L; ++l) {
      g.theta_r[l] = rng.uniform(0.0, kPi);
      g.phi_r[l] = rng.uniform(0.0, kPi);
    }
    const double var = cfg.ref_gain * std::pow(g.distance_m, -cfg.pathloss_exponent) /
                       static_cast<double>(L);
    CMat sigma = CMat::Zero(L, L);
    for (int l = 0; l < L; ++l) sigma(l, l) = rng.complex_normal(var);
    sc.path_response[static_cast<std::size_t>(k)] = std::move(sigma);
  }
  return sc;
}

}  // namespace fasopt
