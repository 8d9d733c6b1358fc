#pragma once

#include <vector>

#include "fasopt/channel.hpp"
#include "fasopt/common.hpp"
#include "fasopt/hi_metrics.hpp"
#include "fasopt/linalg.hpp"

namespace fasopt {

/// Convex quadratic upper bound on the product tau * mu, tight at the
/// expansion point: the concave square in the difference-of-squares identity
/// is linearized there.
struct BilinearBound {
  double tau_bar = 0.0;
  double mu_bar = 0.0;

  // f = (tau+mu)^2/4 + c0 + ctau * tau + cmu * mu
  double c0() const { return 0.25 * (tau_bar - mu_bar) * (tau_bar - mu_bar); }
  double ctau() const { return -0.5 * (tau_bar - mu_bar); }
  double cmu() const { return 0.5 * (tau_bar - mu_bar); }

  double value(double tau, double mu) const {
    const double s = tau + mu;
    return 0.25 * s * s + c0() + ctau() * tau + cmu() * mu;
  }
};

inline BilinearBound bilinear_bound(double tau_bar, double mu_bar) {
  return BilinearBound{tau_bar, mu_bar};
}

/// Eigenvector cut driving a lifted matrix toward rank one:
///   u^H W u >= threshold * Tr(W),
/// with the relaxation level for the next round reported alongside.
struct SrcrCut {
  CVec u;
  double threshold = 0.0;   // level used in this cut
  double next_theta = 0.0;  // min(1, lambda_max/trace + alpha)
  double ratio = 0.0;       // lambda_max/trace of the expansion iterate
};

inline SrcrCut srcr_data(const CMat& w, double theta, double alpha) {
  const double tr = w.trace().real();
  if (!(tr > 0.0)) throw NumericalError("srcr_data: zero-trace matrix");
  auto [lmax, u] = max_eigpair(w);
  SrcrCut cut;
  cut.u = u;
  cut.threshold = theta;
  cut.ratio = lmax / tr;
  cut.next_theta = std::min(1.0, cut.ratio + alpha);
  return cut;
}

/// Sum of phase-shifted cosines over paths, 2 * sum_l amp_l cos(w0 rho_l(t) -
/// phase_l), with rho_l the propagation difference for direction (a_l, b_l).
/// Carries its own gradient, Hessian, and a global curvature bound.
struct TrigSurrogate {
  Eigen::ArrayXd amp;     // |coefficient| per path
  Eigen::ArrayXd phase;   // angle of coefficient per path
  Eigen::ArrayXd dir_a;   // sin(theta) cos(phi) per path
  Eigen::ArrayXd dir_b;   // cos(theta) per path
  double wavenumber = 0.0;  // 2 pi / lambda

  Eigen::ArrayXd angles_at(const Vec2& p) const {
    return wavenumber * (dir_a * p.x() + dir_b * p.y()) - phase;
  }

  double value(const Vec2& p) const { return 2.0 * (amp * angles_at(p).cos()).sum(); }

  Vec2 gradient(const Vec2& p) const {
    const Eigen::ArrayXd s = angles_at(p).sin();
    const double common = -2.0 * wavenumber;
    return Vec2(common * (amp * dir_a * s).sum(), common * (amp * dir_b * s).sum());
  }

  Mat2 hessian(const Vec2& p) const {
    const Eigen::ArrayXd c = angles_at(p).cos();
    const double common = -2.0 * wavenumber * wavenumber;
    Mat2 h;
    h(0, 0) = common * (amp * dir_a * dir_a * c).sum();
    h(0, 1) = common * (amp * dir_a * dir_b * c).sum();
    h(1, 0) = h(0, 1);
    h(1, 1) = common * (amp * dir_b * dir_b * c).sum();
    return h;
  }

  /// Bound on the Hessian spectral norm over all positions (via the
  /// entrywise bound and the Frobenius norm).
  double kappa() const { return 4.0 * wavenumber * wavenumber * amp.sum(); }

  static TrigSurrogate from_coefficients(const CVec& coeff, const Eigen::ArrayXd& theta,
                                         const Eigen::ArrayXd& phi, double wavelength) {
    TrigSurrogate t;
    const int L = static_cast<int>(coeff.size());
    t.amp.resize(L);
    t.phase.resize(L);
    for (int l = 0; l < L; ++l) {
      t.amp[l] = std::abs(coeff[l]);
      t.phase[l] = std::arg(coeff[l]);
    }
    t.dir_a = theta.sin() * phi.cos();
    t.dir_b = theta.cos();
    t.wavenumber = 2.0 * kPi / wavelength;
    return t;
  }
};

/// One-sided quadratic model around an expansion point: value + grad . d
/// +- (kappa/2) |d|^2 with sign -1 for lower bounds and +1 for upper bounds.
struct QuadBound {
  double value_at_center = 0.0;
  Vec2 grad = Vec2::Zero();
  double curvature = 0.0;
  Vec2 center = Vec2::Zero();
  int sign = -1;

  double value(const Vec2& p) const {
    const Vec2 d = p - center;
    return value_at_center + grad.dot(d) + 0.5 * sign * curvature * d.squaredNorm();
  }
};

/// All per-(user, antenna) data for one transmit-position subproblem: the
/// exact channel split around antenna n, the linearized desired-signal model,
/// and the majorized denominator model, each with derivative data.
struct TxExpansion {
  int user = 0;
  int antenna = 0;
  Vec2 t_expansion = Vec2::Zero();

  CMat phi;            // path-domain quadratic kernel of the receive side
  CVec beta;           // cross coupling of antenna n against the others
  double lambda_c = 0.0;  // same-beam contribution of the fixed antennas
  CVec xi;             // linear coefficient of the desired-signal model
  double omega = 0.0;  // linearization offset

  CMat phi_hat;            // denominator kernel scaled by the served powers
  double theta_lmax = 0.0; // top eigenvalue defining the majorizer shift
  CVec chi;                // denominator cross coupling
  double pi_const = 0.0;   // denominator terms independent of antenna n
  double c_const = 0.0;    // majorizer constant
  CVec zeta;               // linear coefficient of the denominator model

  TrigSurrogate signal;       // 2 Re{g(t)^H xi}
  TrigSurrogate denominator;  // 2 Re{g(t)^H zeta}

  double hermitian_defect = 0.0;  // anti-Hermitian residue of phi_hat
};

inline TxExpansion tx_expand(const ChannelScenario& sc, const SystemConfig& cfg,
                             const ChannelWorkspace& ws, const std::vector<CVec>& wvec,
                             int k, int n, const Vec2& t_expansion) {
  const int K = static_cast<int>(wvec.size());
  const int L = sc.n_paths();
  const PathGeometry& geo = sc.geometry.at(static_cast<std::size_t>(k));
  const CMat& g = ws.frm.at(static_cast<std::size_t>(k));
  const CVec& f = ws.rx.at(static_cast<std::size_t>(k));
  const CMat& sigma = sc.path_response.at(static_cast<std::size_t>(k));
  const double rho = cfg.rho_of(k);
  const double eta = cfg.eta;

  TxExpansion ex;
  ex.user = k;
  ex.antenna = n;
  ex.t_expansion = t_expansion;
  // Column n of the workspace response matrix must match t_expansion.
  const CVec g_n = g.col(n);

  const CVec v_phi = sigma.adjoint() * f;  // phi = v v^H
  ex.phi = v_phi * v_phi.adjoint();

  // Per-beam contributions of the antennas other than n.
  std::vector<CVec> others(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i)
    others[static_cast<std::size_t>(i)] = g * wvec[static_cast<std::size_t>(i)] -
                                          g_n * wvec[static_cast<std::size_t>(i)][n];

  const cd wkn = wvec[static_cast<std::size_t>(k)][n];
  ex.beta = std::conj(wkn) * (ex.phi * others[static_cast<std::size_t>(k)]);
  ex.lambda_c =
      (others[static_cast<std::size_t>(k)].adjoint() * ex.phi * others[static_cast<std::size_t>(k)])(0)
          .real();
  const CMat phi_tilde = std::norm(wkn) * ex.phi;
  ex.omega = (g_n.adjoint() * phi_tilde * g_n)(0).real();
  ex.xi = phi_tilde * g_n + ex.beta;

  double coef_other = 0.0, coef_all = 0.0;
  for (int i = 0; i < K; ++i) {
    const double p = std::norm(wvec[static_cast<std::size_t>(i)][n]);
    coef_all += p;
    if (i != k) coef_other += p;
  }
  const double coef = coef_other + (rho + eta + rho * eta) * coef_all;
  CMat phi_hat = coef * ex.phi;
  ex.hermitian_defect = hermiticity_defect(phi_hat);
  ex.phi_hat = 0.5 * (phi_hat + phi_hat.adjoint());
  ex.theta_lmax = max_eigpair(ex.phi_hat).first;

  ex.chi = CVec::Zero(L);
  for (int i = 0; i < K; ++i) {
    const cd win = wvec[static_cast<std::size_t>(i)][n];
    CVec term = std::conj(win) * (ex.phi * others[static_cast<std::size_t>(i)]);
    if (i != k) ex.chi += term;
    ex.chi += rho * term;
  }

  ex.pi_const = (1.0 + rho) * cfg.noise_w;
  for (int i = 0; i < K; ++i) {
    const double quad =
        (others[static_cast<std::size_t>(i)].adjoint() * ex.phi * others[static_cast<std::size_t>(i)])(0)
            .real();
    if (i != k) ex.pi_const += quad;
    ex.pi_const += rho * quad;
    for (int j = 0; j < static_cast<int>(g.cols()); ++j) {
      if (j == n) continue;
      ex.pi_const += (1.0 + rho) * eta * std::norm(wvec[static_cast<std::size_t>(i)][j]) *
                     (g.col(j).adjoint() * ex.phi * g.col(j))(0).real();
    }
  }

  const CMat shift = ex.theta_lmax * CMat::Identity(L, L) - ex.phi_hat;
  ex.c_const = ex.theta_lmax * L + (g_n.adjoint() * shift * g_n)(0).real();
  ex.zeta = ex.chi - shift * g_n;

  ex.signal = TrigSurrogate::from_coefficients(ex.xi, geo.theta_t, geo.phi_t, cfg.wavelength_m);
  ex.denominator =
      TrigSurrogate::from_coefficients(ex.zeta, geo.theta_t, geo.phi_t, cfg.wavelength_m);
  return ex;
}

/// Concave quadratic lower bound of the signal model around the expansion
/// point, packaged for the position subproblem. Together with the constant
/// split terms it lower-bounds the desired-signal trace everywhere.
inline QuadBound tx_lower_bound(const TxExpansion& ex) {
  QuadBound q;
  q.center = ex.t_expansion;
  q.value_at_center = ex.signal.value(ex.t_expansion);
  q.grad = ex.signal.gradient(ex.t_expansion);
  q.curvature = ex.signal.kappa();
  q.sign = -1;
  return q;
}

/// Convex quadratic upper bound of the denominator model; add c_const and
/// pi_const for the full denominator majorizer.
inline QuadBound tx_upper_bound(const TxExpansion& ex) {
  QuadBound q;
  q.center = ex.t_expansion;
  q.value_at_center = ex.denominator.value(ex.t_expansion);
  q.grad = ex.denominator.gradient(ex.t_expansion);
  q.curvature = ex.denominator.kappa();
  q.sign = +1;
  return q;
}

/// Full denominator upper bound at a position.
inline double tx_denominator_bound(const TxExpansion& ex, const QuadBound& upper,
                                   const Vec2& t) {
  return upper.value(t) + ex.c_const + ex.pi_const;
}

/// One linear spacing cut per fixed neighbor; satisfying the cut implies the
/// true pairwise distance bound.
struct DistanceCut {
  Vec2 normal;   // unit vector from neighbor to the expansion point
  double rhs = 0.0;  // cut: normal . t >= rhs
};

inline std::vector<DistanceCut> distance_linearization(const Vec2& t_expansion,
                                                       const std::vector<Vec2>& neighbors,
                                                       double min_spacing) {
  std::vector<DistanceCut> cuts;
  cuts.reserve(neighbors.size());
  for (const Vec2& v : neighbors) {
    const Vec2 d = t_expansion - v;
    const double dist = d.norm();
    if (!(dist > 0.0))
      throw NumericalError("distance_linearization: coincident expansion point and neighbor");
    DistanceCut cut;
    cut.normal = d / dist;
    cut.rhs = min_spacing + cut.normal.dot(v);
    cuts.push_back(cut);
  }
  return cuts;
}

/// Receive-position analogue: exact quadratic kernels in the receive response
/// plus tangent lower/upper models with curvature bounds.
struct RxExpansion {
  int user = 0;
  Vec2 r_expansion = Vec2::Zero();

  CMat a_kernel;       // desired-signal kernel, rank one
  double varpi = 0.0;  // signal value at the expansion point
  CMat b_kernel;       // denominator kernel
  double lambda_r_max = 0.0;
  double sigma_term = 0.0;   // thermal floor including receive distortion
  double upper_const = 0.0;  // majorizer constant beyond the trig part

  TrigSurrogate lower;  // 2 Re{f(r)^H (A fbar)}
  TrigSurrogate upper;  // 2 Re{f(r)^H ((B - lambda I) fbar)}
};

inline RxExpansion rx_expand(const ChannelScenario& sc, const SystemConfig& cfg,
                             const ChannelWorkspace& ws, const std::vector<CVec>& wvec,
                             int k, const Vec2& r_expansion) {
  const int K = static_cast<int>(wvec.size());
  const int L = sc.n_paths();
  const PathGeometry& geo = sc.geometry.at(static_cast<std::size_t>(k));
  const CMat& g = ws.frm.at(static_cast<std::size_t>(k));
  const CMat& sigma = sc.path_response.at(static_cast<std::size_t>(k));
  const double rho = cfg.rho_of(k);
  const double eta = cfg.eta;

  RxExpansion ex;
  ex.user = k;
  ex.r_expansion = r_expansion;
  const CVec fbar = receive_frv(sc, cfg, k, r_expansion).v;

  const CVec sig = sigma * (g * wvec[static_cast<std::size_t>(k)]);
  ex.a_kernel = sig * sig.adjoint();
  ex.varpi = std::real((fbar.adjoint() * ex.a_kernel * fbar)(0));

  Vec served = Vec::Zero(g.cols());
  CMat mix = CMat::Zero(L, L);
  for (int i = 0; i < K; ++i) {
    const CVec si = sigma * (g * wvec[static_cast<std::size_t>(i)]);
    const double weight = (i == k ? 0.0 : 1.0) + rho;
    mix += weight * (si * si.adjoint());
    served += wvec[static_cast<std::size_t>(i)].cwiseAbs2();
  }
  CMat diag_kernel = sigma * g * served.asDiagonal() * g.adjoint() * sigma.adjoint();
  ex.b_kernel = mix + (1.0 + rho) * eta * diag_kernel;
  ex.b_kernel = 0.5 * (ex.b_kernel + ex.b_kernel.adjoint());
  ex.lambda_r_max = max_eigpair(ex.b_kernel).first;

  ex.sigma_term = (1.0 + rho) * cfg.noise_w;
  // Constant part of the majorizer: lambda * L (receive paths) plus the
  // expansion-point value of the shifted kernel.
  const CMat shift = ex.lambda_r_max * CMat::Identity(L, L) - ex.b_kernel;
  ex.upper_const = ex.lambda_r_max * L + std::real((fbar.adjoint() * shift * fbar)(0));

  ex.lower = TrigSurrogate::from_coefficients(CVec(ex.a_kernel * fbar), geo.theta_r, geo.phi_r,
                                              cfg.wavelength_m);
  ex.upper = TrigSurrogate::from_coefficients(CVec(-(shift * fbar)), geo.theta_r, geo.phi_r,
                                              cfg.wavelength_m);
  return ex;
}

/// Signal lower bound at a receive position.
inline double rx_signal_bound(const RxExpansion& ex, const Vec2& r) {
  QuadBound q;
  q.center = ex.r_expansion;
  q.value_at_center = ex.lower.value(ex.r_expansion);
  q.grad = ex.lower.gradient(ex.r_expansion);
  q.curvature = ex.lower.kappa();
  q.sign = -1;
  return q.value(r) - ex.varpi;
}

/// Denominator upper bound at a receive position.
inline double rx_denominator_bound(const RxExpansion& ex, const Vec2& r) {
  QuadBound q;
  q.center = ex.r_expansion;
  q.value_at_center = ex.upper.value(ex.r_expansion);
  q.grad = ex.upper.gradient(ex.r_expansion);
  q.curvature = ex.upper.kappa();
  q.sign = +1;
  return q.value(r) + ex.sigma_term + ex.upper_const;
}

}  // namespace fasopt
