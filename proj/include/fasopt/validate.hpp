#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fasopt/baselines.hpp"
#include "fasopt/surrogates.hpp"

namespace fasopt {

struct ValidationOptions {
  int seeds = 5;
  double tol_scale = 1.0;  // strict profile halves every tolerance
};

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace validate_detail {

struct RandomState {
  SystemConfig cfg;
  ChannelScenario sc;
  AntennaLayout layout;
  std::vector<CVec> wvec;
  ChannelWorkspace ws;
};

inline RandomState random_state(std::uint64_t seed) {
  RandomState st;
  st.cfg = load_config("{}");
  st.sc = sample_scenario(st.cfg, seed);
  Pcg32 rng(seed, 55);
  const double hw = st.cfg.tx_region_halfwidth_m;
  st.layout.tx_positions = {{-hw / 2, -hw / 2}, {hw / 2, -hw / 2}, {-hw / 2, hw / 2},
                            {hw / 2, hw / 2}};
  st.layout.rx_positions.assign(2, Vec2(rng.uniform(-hw, hw) / 2, rng.uniform(-hw, hw) / 2));
  for (int k = 0; k < st.cfg.n_users; ++k) {
    CVec w = assemble_channel(st.sc, st.cfg, k, st.layout).h.adjoint();
    for (int i = 0; i < w.size(); ++i) w[i] += 0.4 * w.norm() * rng.complex_normal(1.0);
    w *= std::sqrt(st.cfg.pmax_w / st.cfg.n_users) / w.norm();
    st.wvec.push_back(w);
  }
  st.ws = ChannelWorkspace::build(st.sc, st.cfg, st.layout);
  return st;
}

inline double tx_signal(const RandomState& st, int k, int n, const Vec2& t) {
  AntennaLayout moved = st.layout;
  moved.tx_positions[static_cast<std::size_t>(n)] = t;
  return std::norm((assemble_channel(st.sc, st.cfg, k, moved).h * st.wvec[k])(0));
}

inline double tx_denominator(const RandomState& st, int k, int n, const Vec2& t) {
  AntennaLayout moved = st.layout;
  moved.tx_positions[static_cast<std::size_t>(n)] = t;
  const ChannelAssembly ch = assemble_channel(st.sc, st.cfg, k, moved);
  std::vector<CMat> lifted;
  for (const CVec& w : st.wvec) lifted.push_back(w * w.adjoint());
  return delta_k(ch.H, lifted, st.cfg.eta, st.cfg.rho_of(k), st.cfg.noise_w, k).total();
}

}  // namespace validate_detail

/// Runs every registered property suite at the requested scale and tolerance
/// profile. Deterministic for fixed options.
inline std::vector<PropertyResult> run_validation(const ValidationOptions& opts) {
  using namespace validate_detail;
  std::vector<PropertyResult> out;
  const double ts = opts.tol_scale;

  {  // Derivatives of the position surrogates against central differences.
    PropertyResult r{"finite_difference_derivatives", true, ""};
    int checked = 0;
    double worst = 0.0;
    for (int s = 0; s < opts.seeds; ++s) {
      RandomState st = random_state(100 + s);
      Pcg32 rng(200 + s);
      for (int rep = 0; rep < 8; ++rep) {
        const int k = static_cast<int>(rng.next_u32() % 2);
        const int n = static_cast<int>(rng.next_u32() % 4);
        TxExpansion ex =
            tx_expand(st.sc, st.cfg, st.ws, st.wvec, k, n, st.layout.tx_positions[n]);
        RxExpansion rx =
            rx_expand(st.sc, st.cfg, st.ws, st.wvec, k, st.layout.rx_positions[k]);
        for (const TrigSurrogate* su : {&ex.signal, &ex.denominator, &rx.lower, &rx.upper}) {
          Vec2 t(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
          const Vec2 g = su->gradient(t);
          const double scale = std::max(1e-300, su->amp.sum() * su->wavenumber);
          for (int axis = 0; axis < 2; ++axis) {
            Vec2 dp = Vec2::Zero();
            dp[axis] = 1e-7;
            const double fd = (su->value(t + dp) - su->value(t - dp)) / 2e-7;
            const double err =
                std::abs(fd - g[axis]) / std::max(std::abs(g[axis]), 1e-3 * scale);
            worst = std::max(worst, err);
            if (err > 1e-4 * ts) r.pass = false;
            ++checked;
          }
        }
      }
    }
    std::ostringstream ss;
    ss << checked << " derivative checks, worst relative error " << worst;
    r.detail = ss.str();
    out.push_back(r);
  }

  {  // Curvature constants dominate sampled Hessians.
    PropertyResult r{"curvature_domination", true, ""};
    double worst = 0.0;
    for (int s = 0; s < opts.seeds; ++s) {
      RandomState st = random_state(300 + s);
      Pcg32 rng(400 + s);
      for (int rep = 0; rep < 4; ++rep) {
        const int k = static_cast<int>(rng.next_u32() % 2);
        const int n = static_cast<int>(rng.next_u32() % 4);
        TxExpansion ex =
            tx_expand(st.sc, st.cfg, st.ws, st.wvec, k, n, st.layout.tx_positions[n]);
        for (const TrigSurrogate* su : {&ex.signal, &ex.denominator}) {
          const double kap = su->kappa();
          for (int probe = 0; probe < 100; ++probe) {
            Vec2 t(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
            Eigen::SelfAdjointEigenSolver<Mat2> es(kap * Mat2::Identity() - su->hessian(t));
            const double viol = -es.eigenvalues().minCoeff() / std::max(1.0, kap);
            worst = std::max(worst, viol);
            if (viol > 1e-9 * ts) r.pass = false;
          }
        }
      }
    }
    std::ostringstream ss;
    ss << "worst normalized violation " << worst;
    r.detail = ss.str();
    out.push_back(r);
  }

  {  // Tangency and one-sided validity of every bound.
    PropertyResult r{"bound_validity", true, ""};
    double worst = 0.0;
    for (int s = 0; s < opts.seeds; ++s) {
      RandomState st = random_state(500 + s);
      Pcg32 rng(600 + s);
      for (int k = 0; k < 2; ++k) {
        const int n = static_cast<int>(rng.next_u32() % 4);
        const Vec2 tbar = st.layout.tx_positions[n];
        TxExpansion ex = tx_expand(st.sc, st.cfg, st.ws, st.wvec, k, n, tbar);
        QuadBound lower = tx_lower_bound(ex);
        QuadBound upper = tx_upper_bound(ex);
        RxExpansion rx = rx_expand(st.sc, st.cfg, st.ws, st.wvec, k, st.layout.rx_positions[k]);
        const double sig_at = lower.value(tbar) + ex.lambda_c - ex.omega;
        const double truth_at = tx_signal(st, k, n, tbar);
        if (std::abs(sig_at - truth_at) > 1e-9 * ts * std::max(truth_at, 1e-300) * 1e3)
          r.pass = false;
        for (int probe = 0; probe < 200; ++probe) {
          Vec2 t(rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25));
          const double truth = tx_signal(st, k, n, t);
          const double viol =
              (lower.value(t) + ex.lambda_c - ex.omega - truth) / std::max(1.0, truth);
          worst = std::max(worst, viol);
          if (viol > 1e-9 * ts) r.pass = false;
          const double dtruth = tx_denominator(st, k, n, t);
          const double dviol =
              (dtruth - tx_denominator_bound(ex, upper, t)) / std::max(1.0, dtruth);
          worst = std::max(worst, dviol);
          if (dviol > 1e-9 * ts) r.pass = false;

          AntennaLayout moved = st.layout;
          moved.rx_positions[static_cast<std::size_t>(k)] = t;
          const ChannelAssembly ch = assemble_channel(st.sc, st.cfg, k, moved);
          std::vector<CMat> lifted;
          for (const CVec& w : st.wvec) lifted.push_back(w * w.adjoint());
          const double rx_truth = std::norm((ch.h * st.wvec[k])(0));
          const double rx_den =
              delta_k(ch.H, lifted, st.cfg.eta, st.cfg.rho_of(k), st.cfg.noise_w, k).total();
          const double lviol = (rx_signal_bound(rx, t) - rx_truth) / std::max(1.0, rx_truth);
          const double uviol = (rx_den - rx_denominator_bound(rx, t)) / std::max(1.0, rx_den);
          worst = std::max(worst, std::max(lviol, uviol));
          if (lviol > 1e-9 * ts || uviol > 1e-9 * ts) r.pass = false;
        }
        // Product bound stays above the product.
        const BilinearBound f = bilinear_bound(rng.uniform(-2, 2), rng.uniform(-2, 2));
        for (int probe = 0; probe < 100; ++probe) {
          const double tau = rng.uniform(-3, 3), mu = rng.uniform(-3, 3);
          if (f.value(tau, mu) < tau * mu - 1e-12 * ts) r.pass = false;
        }
      }
    }
    std::ostringstream ss;
    ss << "worst normalized violation " << worst;
    r.detail = ss.str();
    out.push_back(r);
  }

  {  // Closed-form receive power against the sampling estimate.
    PropertyResult r{"hi_closed_form_vs_monte_carlo", true, ""};
    int misses = 0;
    const int instances = std::max(4, opts.seeds * 2);
    Pcg32 rng(700);
    for (int i = 0; i < instances; ++i) {
      CVec hv(4);
      for (int n = 0; n < 4; ++n) hv[n] = rng.complex_normal(1.0);
      Eigen::RowVectorXcd h = hv.transpose();
      std::vector<CVec> w;
      for (int u = 0; u < 2; ++u) {
        CVec wi(4);
        for (int n = 0; n < 4; ++n) wi[n] = rng.complex_normal(1.0);
        w.push_back(wi);
      }
      const double eta = rng.uniform(0.0, 0.5);
      const double rho = rng.uniform(0.0, 0.5);
      const double sigma2 = rng.uniform(0.01, 0.3);
      DistortionEstimate est = mc_distortion_oracle(h, w, eta, rho, sigma2, 0, 40000, 900 + i);
      const double closed = expected_receive_power(h, w, eta, sigma2);
      if (std::abs(est.mean_abs2 - closed) > 3.0 * est.std_error / ts) ++misses;

      // Diagonal coupling identity.
      CMat H = h.adjoint() * h;
      CMat W0 = w[0] * w[0].adjoint() + w[1] * w[1].adjoint();
      const double via_trace = (CMat(H.diagonal().asDiagonal()) * W0).trace().real();
      double via_sum = 0.0;
      for (int n = 0; n < 4; ++n) via_sum += W0(n, n).real() * std::norm(h[n]);
      if (std::abs(via_trace - via_sum) >
          1e-9 * ts * std::max(1.0, std::abs(via_trace)))
        r.pass = false;
    }
    if (misses > std::max(1, instances / 10)) r.pass = false;
    std::ostringstream ss;
    ss << instances << " instances, " << misses << " outside 3 standard errors";
    r.detail = ss.str();
    out.push_back(r);
  }

  {  // Cone solver certificates and known answers.
    PropertyResult r{"solver_certification", true, ""};
    double worst_gap = 0.0;
    Pcg32 rng(800);
    for (int i = 0; i < std::max(10, 4 * opts.seeds); ++i) {
      const int n = 3 + static_cast<int>(rng.next_u32() % 4);
      ConicProblem p;
      p.num_vars = n;
      p.objective.resize(n);
      for (int j = 0; j < n; ++j) p.objective[j] = rng.normal();
      ConeBlock ball;
      ball.type = ConeType::soc;
      ball.dim = n + 1;
      ball.map_a = Mat::Zero(n + 1, n);
      ball.map_a.bottomRows(n) = Mat::Identity(n, n);
      ball.map_b = Vec::Zero(n + 1);
      ball.map_b[0] = 1.0;
      p.cones.push_back(ball);
      ConicSolution sol = solve(p);
      if (sol.status != SolveStatus::optimal) {
        r.pass = false;
        continue;
      }
      worst_gap = std::max(worst_gap, sol.duality_gap);
      if (sol.primal_residual > 1e-7 / ts || sol.dual_residual > 1e-7 / ts ||
          sol.duality_gap > 1e-6 / ts)
        r.pass = false;
      // Ball-only instances have the analytic optimum |c|.
      if (std::abs(sol.objective - p.objective.norm()) >
          1e-5 * std::max(1.0, p.objective.norm()))
        r.pass = false;
    }
    {
      ConicProblem inf;
      inf.num_vars = 1;
      inf.objective = Vec::Constant(1, 1.0);
      ConeBlock c;
      c.type = ConeType::nonneg;
      c.dim = 2;
      c.map_a = Mat(2, 1);
      c.map_a << 1.0, -1.0;
      c.map_b = Vec(2);
      c.map_b << 0.0, -1.0;
      inf.cones.push_back(c);
      if (solve(inf).status != SolveStatus::infeasible) r.pass = false;
    }
    std::ostringstream ss;
    ss << "worst relative gap " << worst_gap;
    r.detail = ss.str();
    out.push_back(r);
  }

  {  // Short optimizer runs stay monotone and feasible.
    PropertyResult r{"bcd_monotonicity_and_feasibility", true, ""};
    SystemConfig cfg = load_config("{}");
    cfg.max_outer_iters = 3;
    cfg.max_inner_iters = 10;
    for (int s = 0; s < std::max(1, opts.seeds / 2); ++s) {
      const ChannelScenario sc = sample_scenario(cfg, 40 + static_cast<std::uint64_t>(s));
      const BcdResult res = run_bcd(sc, cfg, BcdMode::proposed);
      double prev = -std::numeric_limits<double>::infinity();
      for (double t : res.tau_trace) {
        if (t < prev - 1e-6 * std::max(1.0, std::abs(prev)) * ts) r.pass = false;
        prev = t;
      }
      if (!layout_feasible(res.layout, cfg, 1e-9 * ts)) r.pass = false;
      if (res.beams.total_power() > cfg.pmax_w * (1.0 + 1e-6 * ts)) r.pass = false;
      for (const DeltaBreakdown& d : res.report.delta) {
        const double sum = d.multiuser_interference + d.cu_distortion + d.bs_distortion +
                           d.thermal;
        if (std::abs(sum - d.total()) > 1e-9 * std::max(1.0, d.total())) r.pass = false;
      }
    }
    r.detail = "short runs with reduced iteration caps";
    out.push_back(r);
  }

  {  // Determinism contracts.
    PropertyResult r{"determinism_and_round_trip", true, ""};
    SystemConfig cfg = load_config("{}");
    for (int s = 0; s < opts.seeds; ++s) {
      const ChannelScenario a = sample_scenario(cfg, static_cast<std::uint64_t>(s));
      const ChannelScenario b = sample_scenario(cfg, static_cast<std::uint64_t>(s));
      for (int k = 0; k < cfg.n_users; ++k) {
        if (a.path_response[static_cast<std::size_t>(k)] !=
            b.path_response[static_cast<std::size_t>(k)])
          r.pass = false;
        if ((a.geometry[static_cast<std::size_t>(k)].theta_t !=
             b.geometry[static_cast<std::size_t>(k)].theta_t)
                .any())
          r.pass = false;
      }
    }
    if (load_config(serialize_config(cfg)) != cfg) r.pass = false;
    r.detail = "scenario replay and config round trip";
    out.push_back(r);
  }

  return out;
}

}  // namespace fasopt
