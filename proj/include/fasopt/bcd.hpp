#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fasopt/conic.hpp"
#include "fasopt/hi_metrics.hpp"
#include "fasopt/model.hpp"
#include "fasopt/surrogates.hpp"

namespace fasopt {

enum class BcdMode { proposed, tfa, rfa, fpa };

inline const char* to_string(BcdMode m) {
  switch (m) {
    case BcdMode::proposed: return "proposed";
    case BcdMode::tfa: return "tfa";
    case BcdMode::rfa: return "rfa";
    case BcdMode::fpa: return "fpa";
  }
  return "?";
}

/// Per-iteration record consumed by the experiment harness.
struct TraceRecord {
  int iter = 0;
  std::string loop;  // "beam" | "tx" | "rx"
  double tau = 0.0;
  double min_rate_bph = 0.0;
  std::string solver_status;
};

/// Rank-one relaxation loop state: one relaxation level per user plus the
/// shared step scalar.
struct SrcrState {
  std::vector<double> theta;
  double alpha = 0.1;
};

struct BcdResult {
  AntennaLayout layout;
  BeamformingSet beams;
  RateReport report;
  std::vector<double> tau_trace;  // per outer iteration, vector-scored
  std::vector<TraceRecord> trace;
  int outer_iters = 0;
  int beam_iters = 0;
  int tx_iters = 0;
  int rx_iters = 0;
  std::string termination;
  std::vector<std::string> notes;
};

struct RunOptions {
  std::optional<std::vector<Vec2>> initial_tx;  // overrides the grid start
};

/// w = sqrt(lambda_max) * u_max. The ratio lambda_max/trace reports how close
/// the lifted iterate is to rank one; callers re-score rates from w w^H when
/// the ratio is poor instead of trusting the lifted value.
inline CVec extract_rank_one(const CMat& w, double* ratio = nullptr) {
  const double tr = w.trace().real();
  if (!(tr > 0.0)) throw NumericalError("extract_rank_one: zero matrix");
  auto [lmax, u] = max_eigpair(w);
  if (ratio != nullptr) *ratio = lmax / tr;
  return std::sqrt(std::max(0.0, lmax)) * u;
}

namespace bcd_detail {

// Real parametrization of a Hermitian N x N matrix: N diagonal entries, then
// (Re, Im) per strict-lower entry in column-major order. N^2 parameters.
inline int herm_params(int n) { return n * n; }

inline CMat herm_from_params(const Vec& x, int offset, int n) {
  CMat w = CMat::Zero(n, n);
  int idx = offset;
  for (int j = 0; j < n; ++j) {
    w(j, j) = x[idx++];
    for (int i = j + 1; i < n; ++i) {
      const double re = x[idx++];
      const double im = x[idx++];
      w(i, j) = cd(re, im);
      w(j, i) = cd(re, -im);
    }
  }
  return w;
}

// Row coefficients of Tr(M W(x)) over the parameters of W (M Hermitian).
template <typename Row>
inline void add_trace_coefficients(Row&& row, int offset, const CMat& m, double scale = 1.0) {
  const int n = static_cast<int>(m.rows());
  int idx = offset;
  for (int j = 0; j < n; ++j) {
    row[idx++] += scale * m(j, j).real();
    for (int i = j + 1; i < n; ++i) {
      row[idx++] += scale * 2.0 * m(i, j).real();  // against Re W(i,j)
      row[idx++] += scale * 2.0 * m(i, j).imag();  // against Im W(i,j)
    }
  }
}

// Cone block forcing W(x) (lifted to real symmetric form) positive
// semidefinite.
inline ConeBlock psd_block(int num_vars, int offset, int n) {
  ConeBlock c;
  c.type = ConeType::psd;
  c.dim = 2 * n;
  c.map_a = Mat::Zero(c.rows(), num_vars);
  c.map_b = Vec::Zero(c.rows());
  int idx = offset;
  for (int j = 0; j < n; ++j) {
    {
      CMat basis = CMat::Zero(n, n);
      basis(j, j) = 1.0;
      c.map_a.col(idx++) = svec(hermitian_lift(basis));
    }
    for (int i = j + 1; i < n; ++i) {
      CMat basis = CMat::Zero(n, n);
      basis(i, j) = 1.0;
      basis(j, i) = 1.0;
      c.map_a.col(idx++) = svec(hermitian_lift(basis));
      basis(i, j) = cd(0.0, 1.0);
      basis(j, i) = cd(0.0, -1.0);
      c.map_a.col(idx++) = svec(hermitian_lift(basis));
    }
  }
  return c;
}

// Quadratic-below-affine constraint sum_i u_i(x)^2 <= q(x) as one soc block:
// [(q+1)/2; u; (q-1)/2].
inline ConeBlock quad_le_affine(const Mat& u_rows, const Vec& u_off,
                                const Eigen::RowVectorXd& q_row, double q_off) {
  const int nu = static_cast<int>(u_rows.rows());
  const int nv = static_cast<int>(u_rows.cols());
  ConeBlock c;
  c.type = ConeType::soc;
  c.dim = nu + 2;
  c.map_a = Mat::Zero(c.dim, nv);
  c.map_b = Vec::Zero(c.dim);
  c.map_a.row(0) = 0.5 * q_row;
  c.map_b[0] = 0.5 * (q_off + 1.0);
  c.map_a.middleRows(1, nu) = u_rows;
  c.map_b.segment(1, nu) = u_off;
  c.map_a.row(nu + 1) = 0.5 * q_row;
  c.map_b[nu + 1] = 0.5 * (q_off - 1.0);
  return c;
}

struct Scoring {
  double min_sinr = 0.0;
  std::vector<double> sinr;
  std::vector<double> delta;
};

// Vector-scored rates for the current workspace state.
inline Scoring score(const ChannelScenario& sc, const SystemConfig& cfg,
                     const ChannelWorkspace& ws, const std::vector<CVec>& wvec) {
  const int K = sc.n_users();
  std::vector<CMat> lifted;
  lifted.reserve(static_cast<std::size_t>(K));
  for (const CVec& w : wvec) lifted.push_back(w * w.adjoint());
  Scoring s;
  s.sinr.resize(static_cast<std::size_t>(K));
  s.delta.resize(static_cast<std::size_t>(K));
  s.min_sinr = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const Eigen::RowVectorXcd h = ws.channel_row(sc, k);
    const CMat H = h.adjoint() * h;
    const DeltaBreakdown d = delta_k(H, lifted, cfg.eta, cfg.rho_of(k), cfg.noise_w, k);
    s.delta[static_cast<std::size_t>(k)] = d.total();
    s.sinr[static_cast<std::size_t>(k)] =
        (H * lifted[static_cast<std::size_t>(k)]).trace().real() / d.total();
    s.min_sinr = std::min(s.min_sinr, s.sinr[static_cast<std::size_t>(k)]);
  }
  return s;
}

// Lifted-scored rates (used while the relaxation loop monitors its iterates).
inline Scoring score_lifted(const ChannelScenario& sc, const SystemConfig& cfg,
                            const ChannelWorkspace& ws, const std::vector<CMat>& lifted) {
  const int K = sc.n_users();
  Scoring s;
  s.sinr.resize(static_cast<std::size_t>(K));
  s.delta.resize(static_cast<std::size_t>(K));
  s.min_sinr = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const Eigen::RowVectorXcd h = ws.channel_row(sc, k);
    const CMat H = h.adjoint() * h;
    const DeltaBreakdown d = delta_k(H, lifted, cfg.eta, cfg.rho_of(k), cfg.noise_w, k);
    s.delta[static_cast<std::size_t>(k)] = d.total();
    s.sinr[static_cast<std::size_t>(k)] =
        (H * lifted[static_cast<std::size_t>(k)]).trace().real() / d.total();
    s.min_sinr = std::min(s.min_sinr, s.sinr[static_cast<std::size_t>(k)]);
  }
  return s;
}

// Shared scale for the bilinear surrogate variables; keeps both on the order
// of sqrt(tau * mu) so the cone rows stay balanced even when the raw scales
// differ by orders of magnitude.
inline double tau_scale(double tau_bar, const std::vector<double>& mu_bar) {
  double gm = 0.0;
  for (double m : mu_bar) gm += std::log(std::max(m, 1e-300));
  gm = std::exp(gm / static_cast<double>(mu_bar.size()));
  if (!(tau_bar > 0.0) || !(gm > 0.0)) return 1.0;
  return std::sqrt(tau_bar / gm);
}

struct BeamAssembly {
  ConicProblem problem;
  double s_tau = 1.0;
  int tau_index = 0;
};

// Convexified beamforming subproblem over normalized channels: variables are
// the per-user Hermitian parameters, then tau, then the per-user denominator
// variables (both in balanced units).
inline BeamAssembly build_beam_problem(const SystemConfig& cfg,
                                       const std::vector<CMat>& h_norm, double sigma_n,
                                       const std::vector<SrcrCut>& cuts, double tau_bar,
                                       const std::vector<double>& mu_bar_norm) {
  const int N = cfg.n_tx_antennas;
  const int K = static_cast<int>(h_norm.size());
  const int np = herm_params(N);
  const int nv = K * np + 1 + K;
  const int tau_ix = K * np;

  BeamAssembly out;
  out.tau_index = tau_ix;
  out.s_tau = tau_scale(tau_bar, mu_bar_norm);
  const double s_tau = out.s_tau;

  ConicProblem& p = out.problem;
  p.num_vars = nv;
  p.objective = Vec::Zero(nv);
  p.objective[tau_ix] = s_tau;

  {  // power budget
    ConeBlock power;
    power.type = ConeType::nonneg;
    power.dim = 1;
    power.map_a = Mat::Zero(1, nv);
    power.map_b = Vec::Constant(1, 1.0);
    for (int k = 0; k < K; ++k)
      add_trace_coefficients(power.map_a.row(0), k * np, CMat::Identity(N, N), -1.0);
    p.cones.push_back(power);
  }
  for (int k = 0; k < K; ++k) {
    const double rho = cfg.rho_of(k);
    const CMat& hk = h_norm[static_cast<std::size_t>(k)];
    const CMat hk_diag = CMat(hk.diagonal().asDiagonal());

    // Denominator dominated by its auxiliary variable (linear in the lifted
    // blocks).
    ConeBlock den;
    den.type = ConeType::nonneg;
    den.dim = 1;
    den.map_a = Mat::Zero(1, nv);
    den.map_a(0, tau_ix + 1 + k) = 1.0 / s_tau;
    den.map_b = Vec::Constant(1, -(1.0 + rho) * sigma_n);
    for (int i = 0; i < K; ++i) {
      CMat coupling = cfg.eta * (1.0 + rho) * hk_diag;
      coupling += (i == k ? rho : 1.0 + rho) * hk;
      add_trace_coefficients(den.map_a.row(0), i * np, coupling, -1.0);
    }
    p.cones.push_back(den);

    // Rank-one cut: u^H W u - theta Tr(W) >= 0. The threshold is kept a
    // hair below one so the cut never empties the cone interior.
    ConeBlock cut;
    cut.type = ConeType::nonneg;
    cut.dim = 1;
    cut.map_a = Mat::Zero(1, nv);
    cut.map_b = Vec::Zero(1);
    const CMat uu =
        cuts[static_cast<std::size_t>(k)].u * cuts[static_cast<std::size_t>(k)].u.adjoint();
    add_trace_coefficients(cut.map_a.row(0), k * np, uu, 1.0);
    add_trace_coefficients(cut.map_a.row(0), k * np, CMat::Identity(N, N),
                           -std::min(cuts[static_cast<std::size_t>(k)].threshold, 1.0 - 1e-6));
    p.cones.push_back(cut);

    // Desired signal dominates the bilinear surrogate.
    const BilinearBound f =
        bilinear_bound(tau_bar / s_tau, mu_bar_norm[static_cast<std::size_t>(k)] * s_tau);
    Mat u_rows = Mat::Zero(1, nv);
    u_rows(0, tau_ix) = 0.5;
    u_rows(0, tau_ix + 1 + k) = 0.5;
    Eigen::RowVectorXd q_row = Eigen::RowVectorXd::Zero(nv);
    add_trace_coefficients(q_row, k * np, hk, 1.0);
    q_row[tau_ix] -= f.ctau();
    q_row[tau_ix + 1 + k] -= f.cmu();
    p.cones.push_back(quad_le_affine(u_rows, Vec::Zero(1), q_row, -f.c0()));

    p.cones.push_back(psd_block(nv, k * np, N));
  }
  return out;
}

}  // namespace bcd_detail

/// Deterministic starting point: transmit elements on a centered grid,
/// receive elements at the region centers, matched-filter beams with an even
/// power split, and the surrogate variables scored from that state.
inline std::tuple<AntennaLayout, BeamformingSet, BcdState> init_state(
    const ChannelScenario& sc, const SystemConfig& cfg,
    const std::optional<std::vector<Vec2>>& initial_tx = std::nullopt) {
  const int N = cfg.n_tx_antennas;
  const int K = cfg.n_users;
  AntennaLayout layout;

  if (initial_tx.has_value()) {
    layout.tx_positions = *initial_tx;
    require(static_cast<int>(layout.tx_positions.size()) == N,
            "init_state: wrong custom layout size");
  } else {
    // Compact centered grid at the minimum spacing. Starting interior keeps
    // every movement direction open to the position loops; a region-spanning
    // start parks elements on the boundary, where measured runs stall at the
    // corner-matched local optimum.
    const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(N)))));
    const int cols = (N + rows - 1) / rows;
    const double width = 2.0 * cfg.tx_region_halfwidth_m;
    const double pitch = cfg.min_spacing_m;
    if ((cols - 1) * pitch > width + 1e-12 || (rows - 1) * pitch > width + 1e-12) {
      throw ConfigError("init_state: grid of " + std::to_string(N) +
                        " elements needs " + std::to_string((cols - 1) * pitch) +
                        " m at spacing " + std::to_string(pitch) +
                        " m but the region is only " + std::to_string(width) + " m wide");
    }
    for (int i = 0; i < N; ++i) {
      const int r = i / cols;
      const int c = i % cols;
      layout.tx_positions.emplace_back(-0.5 * (cols - 1) * pitch + c * pitch,
                                       -0.5 * (rows - 1) * pitch + r * pitch);
    }
  }
  layout.rx_positions.assign(static_cast<std::size_t>(K), Vec2::Zero());

  BeamformingSet beams;
  for (int k = 0; k < K; ++k) {
    CVec w = assemble_channel(sc, cfg, k, layout).h.adjoint();
    const double nrm = w.norm();
    if (nrm > 0.0)
      w *= std::sqrt(cfg.pmax_w / K) / nrm;
    else
      w = CVec::Constant(N, std::sqrt(cfg.pmax_w / (K * N)));
    beams.vectors.push_back(w);
    beams.lifted.push_back(w * w.adjoint());
    beams.rank_one_ratio.push_back(1.0);
  }

  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  const bcd_detail::Scoring s = bcd_detail::score(sc, cfg, ws, beams.vectors);
  BcdState state;
  state.tau = s.min_sinr;
  state.mu = s.delta;
  return {layout, beams, state};
}

/// One pass of the relaxed beamforming loop: convexified max-min subproblems
/// with eigenvector cuts pushing the lifted blocks toward rank one, retrying
/// with a halved relaxation step whenever the cut makes the problem
/// infeasible. Updates beams/state in place.
inline void optimize_beamforming(BcdState& state, SrcrState& srcr, const ChannelScenario& sc,
                                 const SystemConfig& cfg, const ChannelWorkspace& ws,
                                 BeamformingSet& beams, BcdResult* log = nullptr) {
  using namespace bcd_detail;
  const int N = cfg.n_tx_antennas;
  const int K = cfg.n_users;
  const int np = herm_params(N);

  if (srcr.theta.empty()) srcr.theta.assign(static_cast<std::size_t>(K), 0.0);

  // Channel normalization shared by the whole loop.
  std::vector<CMat> h_norm(static_cast<std::size_t>(K));
  double h_scale = 0.0;
  for (int k = 0; k < K; ++k) {
    const Eigen::RowVectorXcd h = ws.channel_row(sc, k);
    h_norm[static_cast<std::size_t>(k)] = h.adjoint() * h;
    h_scale += h.squaredNorm();
  }
  h_scale = std::max(h_scale / K, 1e-300);
  for (CMat& m : h_norm) m /= h_scale;
  const double den_scale = h_scale * cfg.pmax_w;  // natural delta units per unit
  const double sigma_n = cfg.noise_w / den_scale;

  std::vector<CMat> lifted = beams.lifted;
  Scoring cur = score_lifted(sc, cfg, ws, lifted);
  double tau_bar = cur.min_sinr;
  std::vector<double> mu_bar = cur.delta;

  int halvings = 0;
  int consecutive_failures = 0;
  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    ++state.beam_iters;
    // Cuts from the current iterate.
    std::vector<SrcrCut> cuts;
    double min_ratio = 1.0;
    for (int k = 0; k < K; ++k) {
      cuts.push_back(srcr_data(lifted[static_cast<std::size_t>(k)],
                               srcr.theta[static_cast<std::size_t>(k)], srcr.alpha));
      min_ratio = std::min(min_ratio, cuts.back().ratio);
    }

    std::vector<double> mu_norm(mu_bar);
    for (double& v : mu_norm) v /= den_scale;
    const BeamAssembly assembly =
        build_beam_problem(cfg, h_norm, sigma_n, cuts, tau_bar, mu_norm);

    const ConicSolution sol = solve(assembly.problem);
    const bool usable = sol.status == SolveStatus::optimal;
    if (usable) {
      std::vector<CMat> cand(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        CMat w = herm_from_params(sol.primal, k * np, N) * cfg.pmax_w;
        cand[static_cast<std::size_t>(k)] = 0.5 * (w + w.adjoint());
      }
      const Scoring trial = score_lifted(sc, cfg, ws, cand);
      if (trial.min_sinr >= tau_bar) {
        lifted = std::move(cand);
        const double gain = rate_bph(trial.min_sinr) - rate_bph(tau_bar);
        tau_bar = trial.min_sinr;
        mu_bar = trial.delta;
        srcr.alpha = cfg.srcr_alpha0;
        consecutive_failures = 0;
        halvings = 0;
        double ratio_now = 1.0;
        for (int k = 0; k < K; ++k) {
          SrcrCut c = srcr_data(lifted[static_cast<std::size_t>(k)],
                                srcr.theta[static_cast<std::size_t>(k)], srcr.alpha);
          srcr.theta[static_cast<std::size_t>(k)] = c.next_theta;
          ratio_now = std::min(ratio_now, c.ratio);
        }
        if (log != nullptr)
          log->trace.push_back({static_cast<int>(log->trace.size()), "beam", tau_bar,
                                rate_bph(state.tau), to_string(sol.status)});
        if (gain <= cfg.eps_w && ratio_now >= 0.99) break;
        continue;
      }
      if (trial.min_sinr >= tau_bar * (1.0 - 1e-6)) {
        // Solved to tolerance with no further headroom: converged.
        if (log != nullptr)
          log->trace.push_back({static_cast<int>(log->trace.size()), "beam", tau_bar,
                                rate_bph(state.tau), "converged"});
        break;
      }
    }

    // Infeasible, failed, or clearly worse: keep the iterate and soften the
    // relaxation step.
    if (log != nullptr)
      log->trace.push_back({static_cast<int>(log->trace.size()), "beam", tau_bar,
                            rate_bph(state.tau), usable ? "rejected" : to_string(sol.status)});
    srcr.alpha *= 0.5;
    ++halvings;
    if (sol.status == SolveStatus::numerical_failure) {
      ++consecutive_failures;
      if (consecutive_failures >= 3 && halvings >= 3) {
        if (log != nullptr) log->notes.push_back("beamforming aborted on solver failures");
        break;
      }
    } else {
      consecutive_failures = 0;
    }
    for (int k = 0; k < K; ++k)
      srcr.theta[static_cast<std::size_t>(k)] =
          std::min(1.0, cuts[static_cast<std::size_t>(k)].ratio + srcr.alpha);
    if (srcr.alpha < 1e-9) break;
  }

  // Commit only if the extracted vectors do not regress the vector-scored
  // state; the relaxation drives the ratios near one, so regressions signal
  // an unconverged extraction rather than progress.
  BeamformingSet cand;
  cand.lifted = lifted;
  cand.vectors.resize(static_cast<std::size_t>(K));
  cand.rank_one_ratio.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    double ratio = 0.0;
    cand.vectors[static_cast<std::size_t>(k)] =
        extract_rank_one(lifted[static_cast<std::size_t>(k)], &ratio);
    cand.rank_one_ratio[static_cast<std::size_t>(k)] = ratio;
  }
  const Scoring after = score(sc, cfg, ws, cand.vectors);
  if (after.min_sinr >= state.tau) {
    beams = std::move(cand);
    state.tau = after.min_sinr;
    state.mu = after.delta;
  } else if (log != nullptr) {
    log->notes.push_back("beamforming extraction kept the previous iterate");
  }
}

/// Per-antenna sweep of the transmit-position loop. Each antenna solves a
/// small cone program built from its expansion and moves only when the true
/// vector-scored minimum SINR does not decrease.
inline void optimize_tx_positions(BcdState& state, const ChannelScenario& sc,
                                  const SystemConfig& cfg, ChannelWorkspace& ws,
                                  AntennaLayout& layout, const BeamformingSet& beams,
                                  BcdResult* log = nullptr) {
  using namespace bcd_detail;
  const int N = cfg.n_tx_antennas;
  const int K = cfg.n_users;
  const int nv = 2 + 1 + K;  // t, tau, mu_k
  const int tau_ix = 2;

  double h_scale = 0.0;
  for (int k = 0; k < K; ++k) h_scale += ws.channel_row(sc, k).squaredNorm();
  h_scale = std::max(h_scale / K, 1e-300);
  const double den_scale = h_scale * cfg.pmax_w;

  // Each antenna iterates its own expand/solve/accept fixed point (the
  // per-antenna surrogate is only tight near the expansion point, so one
  // solve moves a small fraction of a wavelength); the sweep threshold then
  // applies to whole passes over the array.
  const double sub_gain_floor = cfg.eps_t / (8.0 * N);
  const int sub_cap = 30;
  for (int sweep = 0; sweep < cfg.max_inner_iters; ++sweep) {
    ++state.tx_iters;
    const double sweep_start = state.tau;
    for (int n = 0; n < N; ++n) {
      for (int sub = 0; sub < sub_cap; ++sub) {
      const Vec2 tbar = layout.tx_positions[static_cast<std::size_t>(n)];
      const double s_tau = tau_scale(state.tau, [&] {
        std::vector<double> m(state.mu);
        for (double& v : m) v /= den_scale;
        return m;
      }());

      ConicProblem p;
      p.num_vars = nv;
      p.objective = Vec::Zero(nv);
      p.objective[tau_ix] = s_tau;

      bool degenerate = false;
      for (int k = 0; k < K; ++k) {
        TxExpansion ex;
        try {
          ex = tx_expand(sc, cfg, ws, beams.vectors, k, n, tbar);
        } catch (const NumericalError&) {
          degenerate = true;
          break;
        }
        const QuadBound lower = tx_lower_bound(ex);
        const QuadBound upper = tx_upper_bound(ex);
        const BilinearBound f = bilinear_bound(
            state.tau / s_tau, state.mu[static_cast<std::size_t>(k)] / den_scale * s_tau);

        // Signal bound above the bilinear surrogate.
        {
          const double kap = lower.curvature / den_scale;
          Mat u_rows = Mat::Zero(3, nv);
          Vec u_off = Vec::Zero(3);
          u_rows(0, tau_ix) = 0.5;
          u_rows(0, tau_ix + 1 + k) = 0.5;
          const double root = std::sqrt(0.5 * kap);
          u_rows(1, 0) = root;
          u_off[1] = -root * tbar.x();
          u_rows(2, 1) = root;
          u_off[2] = -root * tbar.y();
          Eigen::RowVectorXd q_row = Eigen::RowVectorXd::Zero(nv);
          q_row[0] = lower.grad.x() / den_scale;
          q_row[1] = lower.grad.y() / den_scale;
          q_row[tau_ix] -= f.ctau();
          q_row[tau_ix + 1 + k] -= f.cmu();
          const double q_off = (lower.value_at_center - lower.grad.dot(tbar) + ex.lambda_c -
                                ex.omega) / den_scale -
                               f.c0();
          p.cones.push_back(quad_le_affine(u_rows, u_off, q_row, q_off));
        }
        // Denominator bound below its auxiliary variable.
        {
          const double kap = upper.curvature / den_scale;
          Mat u_rows = Mat::Zero(2, nv);
          Vec u_off = Vec::Zero(2);
          const double root = std::sqrt(0.5 * kap);
          u_rows(0, 0) = root;
          u_off[0] = -root * tbar.x();
          u_rows(1, 1) = root;
          u_off[1] = -root * tbar.y();
          Eigen::RowVectorXd q_row = Eigen::RowVectorXd::Zero(nv);
          q_row[tau_ix + 1 + k] = 1.0 / s_tau;
          q_row[0] = -upper.grad.x() / den_scale;
          q_row[1] = -upper.grad.y() / den_scale;
          const double q_off = -(upper.value_at_center - upper.grad.dot(tbar) + ex.c_const +
                                 ex.pi_const) / den_scale;
          p.cones.push_back(quad_le_affine(u_rows, u_off, q_row, q_off));
        }
      }
      if (degenerate) {
        if (log != nullptr) log->notes.push_back("tx expansion degenerate, antenna skipped");
        break;
      }

      {  // region box
        ConeBlock box;
        box.type = ConeType::nonneg;
        box.dim = 4;
        box.map_a = Mat::Zero(4, nv);
        box.map_b = Vec::Constant(4, cfg.tx_region_halfwidth_m);
        box.map_a(0, 0) = 1.0;
        box.map_a(1, 0) = -1.0;
        box.map_a(2, 1) = 1.0;
        box.map_a(3, 1) = -1.0;
        p.cones.push_back(box);
      }
      {  // spacing cuts against the fixed antennas
        std::vector<Vec2> others;
        for (int v = 0; v < N; ++v)
          if (v != n) others.push_back(layout.tx_positions[static_cast<std::size_t>(v)]);
        const auto cuts = distance_linearization(tbar, others, cfg.min_spacing_m);
        ConeBlock spacing;
        spacing.type = ConeType::nonneg;
        spacing.dim = static_cast<int>(cuts.size());
        spacing.map_a = Mat::Zero(spacing.dim, nv);
        spacing.map_b = Vec::Zero(spacing.dim);
        for (int i = 0; i < spacing.dim; ++i) {
          spacing.map_a(i, 0) = cuts[static_cast<std::size_t>(i)].normal.x();
          spacing.map_a(i, 1) = cuts[static_cast<std::size_t>(i)].normal.y();
          spacing.map_b[i] = -cuts[static_cast<std::size_t>(i)].rhs;
        }
        p.cones.push_back(spacing);
      }

      const ConicSolution sol = solve(p);
      if (sol.status != SolveStatus::optimal) {
        if (log != nullptr)
          log->trace.push_back({static_cast<int>(log->trace.size()), "tx", state.tau,
                                rate_bph(state.tau), to_string(sol.status)});
        break;
      }
      Vec2 cand(sol.primal[0], sol.primal[1]);
      cand.x() = std::clamp(cand.x(), -cfg.tx_region_halfwidth_m, cfg.tx_region_halfwidth_m);
      cand.y() = std::clamp(cand.y(), -cfg.tx_region_halfwidth_m, cfg.tx_region_halfwidth_m);
      bool spaced = true;
      for (int v = 0; v < N; ++v)
        if (v != n &&
            (cand - layout.tx_positions[static_cast<std::size_t>(v)]).norm() <
                cfg.min_spacing_m - 1e-9)
          spaced = false;

      bool accepted = false;
      double gain = 0.0;
      if (spaced) {
        ws.update_tx_column(sc, cfg, n, cand);
        const Scoring trial = score(sc, cfg, ws, beams.vectors);
        if (trial.min_sinr > state.tau) {
          gain = rate_bph(trial.min_sinr) - rate_bph(state.tau);
          layout.tx_positions[static_cast<std::size_t>(n)] = cand;
          state.tau = trial.min_sinr;
          state.mu = trial.delta;
          accepted = true;
        } else {
          ws.update_tx_column(sc, cfg, n, tbar);
        }
      }
      if (log != nullptr)
        log->trace.push_back({static_cast<int>(log->trace.size()), "tx", state.tau,
                              rate_bph(state.tau), accepted ? "optimal" : "rejected"});
      if (!accepted || gain <= sub_gain_floor) break;
      }  // per-antenna iterations
    }
    if (rate_bph(state.tau) - rate_bph(sweep_start) <= cfg.eps_t) break;
  }
}

/// Receive-position loop: independent per-user subproblems, accepted only
/// when the user's own SINR does not decrease.
inline void optimize_rx_positions(BcdState& state, const ChannelScenario& sc,
                                  const SystemConfig& cfg, ChannelWorkspace& ws,
                                  AntennaLayout& layout, const BeamformingSet& beams,
                                  BcdResult* log = nullptr) {
  using namespace bcd_detail;
  const int K = cfg.n_users;
  const int nv = 2 + 2;  // r, tau, mu

  double h_scale = 0.0;
  for (int k = 0; k < K; ++k) h_scale += ws.channel_row(sc, k).squaredNorm();
  h_scale = std::max(h_scale / K, 1e-300);
  const double den_scale = h_scale * cfg.pmax_w;

  const double sub_gain_floor = cfg.eps_r / (8.0 * K);
  const int sub_cap = 30;
  for (int round = 0; round < cfg.max_inner_iters; ++round) {
    ++state.rx_iters;
    const double round_start = state.tau;
    for (int k = 0; k < K; ++k) {
      for (int sub = 0; sub < sub_cap; ++sub) {
      const Vec2 rbar = layout.rx_positions[static_cast<std::size_t>(k)];
      Scoring before = score(sc, cfg, ws, beams.vectors);
      const double own = before.sinr[static_cast<std::size_t>(k)];
      const double own_mu = before.delta[static_cast<std::size_t>(k)];
      const double s_tau = tau_scale(own, {own_mu / den_scale});

      RxExpansion ex = rx_expand(sc, cfg, ws, beams.vectors, k, rbar);
      const BilinearBound f = bilinear_bound(own / s_tau, own_mu / den_scale * s_tau);

      ConicProblem p;
      p.num_vars = nv;
      p.objective = Vec::Zero(nv);
      p.objective[2] = s_tau;
      {
        const double kap = ex.lower.kappa() / den_scale;
        Mat u_rows = Mat::Zero(3, nv);
        Vec u_off = Vec::Zero(3);
        u_rows(0, 2) = 0.5;
        u_rows(0, 3) = 0.5;
        const double root = std::sqrt(0.5 * kap);
        u_rows(1, 0) = root;
        u_off[1] = -root * rbar.x();
        u_rows(2, 1) = root;
        u_off[2] = -root * rbar.y();
        const Vec2 grad = ex.lower.gradient(rbar);
        Eigen::RowVectorXd q_row = Eigen::RowVectorXd::Zero(nv);
        q_row[0] = grad.x() / den_scale;
        q_row[1] = grad.y() / den_scale;
        q_row[2] -= f.ctau();
        q_row[3] -= f.cmu();
        const double q_off =
            (ex.lower.value(rbar) - grad.dot(rbar) - ex.varpi) / den_scale - f.c0();
        p.cones.push_back(quad_le_affine(u_rows, u_off, q_row, q_off));
      }
      {
        const double kap = ex.upper.kappa() / den_scale;
        Mat u_rows = Mat::Zero(2, nv);
        Vec u_off = Vec::Zero(2);
        const double root = std::sqrt(0.5 * kap);
        u_rows(0, 0) = root;
        u_off[0] = -root * rbar.x();
        u_rows(1, 1) = root;
        u_off[1] = -root * rbar.y();
        const Vec2 grad = ex.upper.gradient(rbar);
        Eigen::RowVectorXd q_row = Eigen::RowVectorXd::Zero(nv);
        q_row[3] = 1.0 / s_tau;
        q_row[0] = -grad.x() / den_scale;
        q_row[1] = -grad.y() / den_scale;
        const double q_off = -(ex.upper.value(rbar) - grad.dot(rbar) + ex.sigma_term +
                               ex.upper_const) / den_scale;
        p.cones.push_back(quad_le_affine(u_rows, u_off, q_row, q_off));
      }
      {
        ConeBlock box;
        box.type = ConeType::nonneg;
        box.dim = 4;
        box.map_a = Mat::Zero(4, nv);
        box.map_b = Vec::Constant(4, cfg.rx_region_halfwidth_m);
        box.map_a(0, 0) = 1.0;
        box.map_a(1, 0) = -1.0;
        box.map_a(2, 1) = 1.0;
        box.map_a(3, 1) = -1.0;
        p.cones.push_back(box);
      }

      const ConicSolution sol = solve(p);
      if (sol.status != SolveStatus::optimal) {
        if (log != nullptr)
          log->trace.push_back({static_cast<int>(log->trace.size()), "rx", state.tau,
                                rate_bph(state.tau), to_string(sol.status)});
        break;
      }
      Vec2 cand(sol.primal[0], sol.primal[1]);
      cand.x() = std::clamp(cand.x(), -cfg.rx_region_halfwidth_m, cfg.rx_region_halfwidth_m);
      cand.y() = std::clamp(cand.y(), -cfg.rx_region_halfwidth_m, cfg.rx_region_halfwidth_m);

      ws.update_rx(sc, cfg, k, cand);
      const Scoring trial = score(sc, cfg, ws, beams.vectors);
      bool accepted = false;
      double gain = 0.0;
      if (trial.sinr[static_cast<std::size_t>(k)] > own) {
        gain = rate_bph(trial.sinr[static_cast<std::size_t>(k)]) - rate_bph(own);
        layout.rx_positions[static_cast<std::size_t>(k)] = cand;
        state.tau = trial.min_sinr;
        state.mu = trial.delta;
        accepted = true;
      } else {
        ws.update_rx(sc, cfg, k, rbar);
      }
      if (log != nullptr)
        log->trace.push_back({static_cast<int>(log->trace.size()), "rx", state.tau,
                              rate_bph(state.tau), accepted ? "optimal" : "rejected"});
      if (!accepted || gain <= sub_gain_floor) break;
      }  // per-user iterations
    }
    if (rate_bph(state.tau) - rate_bph(round_start) <= cfg.eps_r) break;
  }
}

/// Full alternating optimization. Mode selects which position loops run
/// (tfa: transmit only, rfa: receive only, fpa: neither).
inline BcdResult run_bcd(const ChannelScenario& sc, const SystemConfig& cfg, BcdMode mode,
                         const RunOptions& opts = {}) {
  BcdResult result;
  auto [layout, beams, state] = init_state(sc, cfg, opts.initial_tx);
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  SrcrState srcr;
  srcr.alpha = cfg.srcr_alpha0;

  const bool do_tx = mode == BcdMode::proposed || mode == BcdMode::tfa;
  const bool do_rx = mode == BcdMode::proposed || mode == BcdMode::rfa;

  result.termination = "outer_cap";
  double prev_outer = state.tau;
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    ++state.outer_iters;
    optimize_beamforming(state, srcr, sc, cfg, ws, beams, &result);
    if (do_tx) optimize_tx_positions(state, sc, cfg, ws, layout, beams, &result);
    if (do_rx) optimize_rx_positions(state, sc, cfg, ws, layout, beams, &result);

    state.tau_trace.push_back(state.tau);
    if (outer > 0 && rate_bph(state.tau) - rate_bph(prev_outer) <= cfg.eps) {
      result.termination = "converged";
      prev_outer = state.tau;
      break;
    }
    prev_outer = state.tau;
  }

  result.layout = layout;
  result.beams = beams;
  result.report = rate_report(sc, layout, beams, cfg);
  result.tau_trace = state.tau_trace;
  result.outer_iters = state.outer_iters;
  result.beam_iters = state.beam_iters;
  result.tx_iters = state.tx_iters;
  result.rx_iters = state.rx_iters;
  return result;
}

}  // namespace fasopt
