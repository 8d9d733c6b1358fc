#pragma once

#include <vector>

#include "fasopt/common.hpp"
#include "fasopt/model.hpp"
#include "fasopt/scenario.hpp"

namespace fasopt {

/// Unit-modulus phase vector over paths for one antenna position. The phase
/// reference origin is the region center (0,0); any other fixed choice only
/// shifts a global phase.
struct FieldResponse {
  CVec v;
  int user = 0;
  Vec2 position = Vec2::Zero();
};

/// Propagation-difference of path l at position p for the given angle pair.
inline double propagation_difference(const Vec2& p, double theta, double phi) {
  return p.x() * std::sin(theta) * std::cos(phi) + p.y() * std::cos(theta);
}

inline FieldResponse transmit_frv(const ChannelScenario& sc, const SystemConfig& cfg, int k,
                                  const Vec2& t) {
  const PathGeometry& g = sc.geometry.at(static_cast<std::size_t>(k));
  const int L = static_cast<int>(g.theta_t.size());
  FieldResponse fr;
  fr.user = k;
  fr.position = t;
  fr.v.resize(L);
  const double wave = 2.0 * kPi / cfg.wavelength_m;
  for (int l = 0; l < L; ++l) {
    double phase = wave * propagation_difference(t, g.theta_t[l], g.phi_t[l]);
    fr.v[l] = cd(std::cos(phase), std::sin(phase));
  }
  return fr;
}

inline FieldResponse receive_frv(const ChannelScenario& sc, const SystemConfig& cfg, int k,
                                 const Vec2& r) {
  const PathGeometry& g = sc.geometry.at(static_cast<std::size_t>(k));
  const int L = static_cast<int>(g.theta_r.size());
  FieldResponse fr;
  fr.user = k;
  fr.position = r;
  fr.v.resize(L);
  const double wave = 2.0 * kPi / cfg.wavelength_m;
  for (int l = 0; l < L; ++l) {
    double phase = wave * propagation_difference(r, g.theta_r[l], g.phi_r[l]);
    fr.v[l] = cd(std::cos(phase), std::sin(phase));
  }
  return fr;
}

/// L x N matrix whose column n is the transmit response at position n.
inline CMat transmit_frm(const ChannelScenario& sc, const SystemConfig& cfg, int k,
                         const std::vector<Vec2>& tx_positions) {
  const int L = sc.n_paths();
  const int N = static_cast<int>(tx_positions.size());
  CMat g(L, N);
  for (int n = 0; n < N; ++n) g.col(n) = transmit_frv(sc, cfg, k, tx_positions[n]).v;
  return g;
}

struct ChannelAssembly {
  Eigen::RowVectorXcd h;  // 1 x N
  CMat H;                 // h^H h, Hermitian PSD of rank <= 1
};

inline ChannelAssembly assemble_channel(const ChannelScenario& sc, const SystemConfig& cfg,
                                        int k, const AntennaLayout& layout) {
  const CMat g = transmit_frm(sc, cfg, k, layout.tx_positions);
  const CVec f = receive_frv(sc, cfg, k, layout.rx_positions.at(static_cast<std::size_t>(k))).v;
  const CMat& sigma = sc.path_response.at(static_cast<std::size_t>(k));
  ChannelAssembly out;
  out.h = f.adjoint() * sigma * g;
  out.H = out.h.adjoint() * out.h;
  return out;
}

/// Per-user channel cache for the position loops: single-column updates keep
/// the per-antenna sweep cheap.
struct ChannelWorkspace {
  std::vector<CMat> frm;        // G_k per user
  std::vector<CVec> rx;         // f_k per user

  static ChannelWorkspace build(const ChannelScenario& sc, const SystemConfig& cfg,
                                const AntennaLayout& layout) {
    ChannelWorkspace ws;
    const int K = sc.n_users();
    ws.frm.resize(static_cast<std::size_t>(K));
    ws.rx.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      ws.frm[static_cast<std::size_t>(k)] = transmit_frm(sc, cfg, k, layout.tx_positions);
      ws.rx[static_cast<std::size_t>(k)] =
          receive_frv(sc, cfg, k, layout.rx_positions[static_cast<std::size_t>(k)]).v;
    }
    return ws;
  }

  void update_tx_column(const ChannelScenario& sc, const SystemConfig& cfg, int n,
                        const Vec2& t) {
    for (int k = 0; k < static_cast<int>(frm.size()); ++k)
      frm[static_cast<std::size_t>(k)].col(n) = transmit_frv(sc, cfg, k, t).v;
  }

  void update_rx(const ChannelScenario& sc, const SystemConfig& cfg, int k, const Vec2& r) {
    rx[static_cast<std::size_t>(k)] = receive_frv(sc, cfg, k, r).v;
  }

  Eigen::RowVectorXcd channel_row(const ChannelScenario& sc, int k) const {
    return rx[static_cast<std::size_t>(k)].adjoint() *
           sc.path_response[static_cast<std::size_t>(k)] * frm[static_cast<std::size_t>(k)];
  }
};

}  // namespace fasopt
