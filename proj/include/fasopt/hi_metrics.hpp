#pragma once

#include <vector>

#include "fasopt/channel.hpp"
#include "fasopt/common.hpp"
#include "fasopt/model.hpp"
#include "fasopt/rng.hpp"

namespace fasopt {

/// SINR denominator split for user k under the additive-Gaussian impairment
/// model. The distortion terms scale with the served powers; the four parts
/// sum exactly to the denominator.
inline DeltaBreakdown delta_k(const CMat& H, const std::vector<CMat>& W, double eta,
                              double rho, double sigma2, int k) {
  if (hermiticity_defect(H) > 1e-8 * std::max(1.0, H.cwiseAbs().maxCoeff()))
    throw NumericalError("delta_k: channel matrix is not Hermitian");
  DeltaBreakdown d;
  const Vec h_diag = H.diagonal().real();
  double tr_all = 0.0;
  double tr_diag_all = 0.0;
  for (int i = 0; i < static_cast<int>(W.size()); ++i) {
    const CMat& Wi = W[static_cast<std::size_t>(i)];
    if (hermiticity_defect(Wi) > 1e-8 * std::max(1.0, Wi.cwiseAbs().maxCoeff()))
      throw NumericalError("delta_k: precoding matrix is not Hermitian");
    const double tr = (H * Wi).trace().real();
    tr_all += tr;
    tr_diag_all += h_diag.dot(Wi.diagonal().real());
    if (i != k) d.multiuser_interference += tr;
  }
  d.cu_distortion = rho * tr_all;
  d.bs_distortion = eta * (1.0 + rho) * tr_diag_all;
  d.thermal = (1.0 + rho) * sigma2;
  return d;
}

inline double sinr(const CMat& H, const std::vector<CMat>& W, double eta, double rho,
                   double sigma2, int k) {
  const double num = (H * W[static_cast<std::size_t>(k)]).trace().real();
  const double den = delta_k(H, W, eta, rho, sigma2, k).total();
  if (!(den > 0.0)) throw NumericalError("sinr: nonpositive denominator");
  return num / den;
}

struct DistortionEstimate {
  double mean_abs2 = 0.0;   // empirical E|y_pre|^2 (before receive distortion)
  double std_error = 0.0;
  double sinr = 0.0;        // implied by the estimate
  int n_samples = 0;
};

/// Monte-Carlo estimate of the pre-distortion receive power: data symbols,
/// transmit distortion drawn from the served-power diagonal, and thermal
/// noise are sampled jointly. Serves as the independent check of the closed
/// forms used everywhere else.
inline DistortionEstimate mc_distortion_oracle(const Eigen::RowVectorXcd& h,
                                               const std::vector<CVec>& w, double eta,
                                               double rho, double sigma2, int k,
                                               int n_samples, std::uint64_t seed) {
  const int N = static_cast<int>(h.size());
  const int K = static_cast<int>(w.size());
  Vec served = Vec::Zero(N);
  for (const CVec& wi : w) served += wi.cwiseAbs2();

  Pcg32 rng(seed, 0);
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    CVec x = CVec::Zero(N);
    for (int i = 0; i < K; ++i) x += w[static_cast<std::size_t>(i)] * rng.complex_normal(1.0);
    if (eta > 0.0)
      for (int n = 0; n < N; ++n) x[n] += rng.complex_normal(eta * served[n]);
    const cd y = (h * x)(0) + rng.complex_normal(sigma2);
    const double a2 = std::norm(y);
    sum += a2;
    sumsq += a2 * a2;
  }
  DistortionEstimate est;
  est.n_samples = n_samples;
  est.mean_abs2 = sum / n_samples;
  const double var = std::max(0.0, sumsq / n_samples - est.mean_abs2 * est.mean_abs2);
  est.std_error = std::sqrt(var / n_samples);

  const double desired = std::norm((h * w[static_cast<std::size_t>(k)])(0));
  const double den = (1.0 + rho) * est.mean_abs2 - desired;
  est.sinr = den > 0.0 ? desired / den : 0.0;
  return est;
}

/// Closed-form pre-distortion receive power matching the oracle above.
inline double expected_receive_power(const Eigen::RowVectorXcd& h, const std::vector<CVec>& w,
                                     double eta, double sigma2) {
  double total = sigma2;
  Vec served = Vec::Zero(h.size());
  for (const CVec& wi : w) {
    total += std::norm((h * wi)(0));
    served += wi.cwiseAbs2();
  }
  for (int n = 0; n < h.size(); ++n) total += eta * served[n] * std::norm(h[n]);
  return total;
}

/// Scores a layout/beam pair: rates are always computed from the extracted
/// vectors (w_k w_k^H), never from the lifted iterates.
inline RateReport rate_report(const ChannelScenario& sc, const AntennaLayout& layout,
                              const BeamformingSet& beams, const SystemConfig& cfg) {
  const int K = sc.n_users();
  std::vector<CMat> W;
  W.reserve(static_cast<std::size_t>(K));
  for (const CVec& w : beams.vectors) W.push_back(w * w.adjoint());

  RateReport rep;
  rep.sinr.resize(static_cast<std::size_t>(K));
  rep.rate_bph.resize(static_cast<std::size_t>(K));
  rep.delta.resize(static_cast<std::size_t>(K));
  rep.min_rate_bph = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const ChannelAssembly ch = assemble_channel(sc, cfg, k, layout);
    const DeltaBreakdown d = delta_k(ch.H, W, cfg.eta, cfg.rho_of(k), cfg.noise_w, k);
    const double num = (ch.H * W[static_cast<std::size_t>(k)]).trace().real();
    rep.delta[static_cast<std::size_t>(k)] = d;
    rep.sinr[static_cast<std::size_t>(k)] = num / d.total();
    rep.rate_bph[static_cast<std::size_t>(k)] = rate_bph(rep.sinr[static_cast<std::size_t>(k)]);
    rep.min_rate_bph = std::min(rep.min_rate_bph, rep.rate_bph[static_cast<std::size_t>(k)]);
  }
  return rep;
}

}  // namespace fasopt
