#pragma once

#include <string>
#include <vector>

#include "fasopt/common.hpp"
#include "fasopt/config.hpp"

namespace fasopt {

/// Geometric decision variables: transmit element positions and one receive
/// position per user, all in meters relative to the respective region center.
struct AntennaLayout {
  std::vector<Vec2> tx_positions;
  std::vector<Vec2> rx_positions;
};

inline bool in_box(const Vec2& p, double halfwidth, double tol = 1e-9) {
  return std::abs(p.x()) <= halfwidth + tol && std::abs(p.y()) <= halfwidth + tol;
}

/// Checks region membership and pairwise transmit spacing (tolerance in meters).
inline bool layout_feasible(const AntennaLayout& layout, const SystemConfig& cfg,
                            double tol = 1e-9) {
  for (const Vec2& t : layout.tx_positions)
    if (!in_box(t, cfg.tx_region_halfwidth_m, tol)) return false;
  for (const Vec2& r : layout.rx_positions)
    if (!in_box(r, cfg.rx_region_halfwidth_m, tol)) return false;
  const std::size_t n = layout.tx_positions.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if ((layout.tx_positions[a] - layout.tx_positions[b]).norm() < cfg.min_spacing_m - tol)
        return false;
  return true;
}

/// Precoding decision variables: lifted matrices W_k, the extracted vectors
/// w_k, and the per-matrix rank-one quality lambda_max(W_k)/Tr(W_k).
struct BeamformingSet {
  std::vector<CMat> lifted;
  std::vector<CVec> vectors;
  std::vector<double> rank_one_ratio;

  double total_power() const {
    double p = 0.0;
    for (const CMat& w : lifted) p += w.trace().real();
    return p;
  }
};

/// Additive split of a user's SINR denominator, all in watts.
struct DeltaBreakdown {
  double multiuser_interference = 0.0;
  double cu_distortion = 0.0;
  double bs_distortion = 0.0;
  double thermal = 0.0;

  double total() const {
    return multiuser_interference + cu_distortion + bs_distortion + thermal;
  }
};

struct RateReport {
  std::vector<double> sinr;       // linear
  std::vector<double> rate_bph;   // bits/s/Hz
  double min_rate_bph = 0.0;
  std::vector<DeltaBreakdown> delta;

  double min_sinr() const {
    double m = sinr.empty() ? 0.0 : sinr.front();
    for (double g : sinr) m = std::min(m, g);
    return m;
  }
};

/// Running state of the alternating optimization: the current max-min SINR
/// value, the per-user denominator values used as expansion points, and the
/// iteration bookkeeping.
struct BcdState {
  double tau = 0.0;
  std::vector<double> mu;
  int outer_iters = 0;
  int beam_iters = 0;
  int tx_iters = 0;
  int rx_iters = 0;
  std::vector<double> tau_trace;  // one entry per outer iteration
};

}  // namespace fasopt
