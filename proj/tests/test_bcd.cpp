#include <catch_amalgamated.hpp>

#include "fasopt/bcd.hpp"

using namespace fasopt;

TEST_CASE("initial state: grid geometry, power split, and scored surrogates") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 7);
  auto [layout, beams, state] = init_state(sc, cfg);

  REQUIRE(layout.tx_positions.size() == 4);
  REQUIRE(layout.rx_positions.size() == 2);
  for (const Vec2& r : layout.rx_positions) CHECK(r.norm() == 0.0);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b)
      CHECK((layout.tx_positions[a] - layout.tx_positions[b]).norm() >=
            cfg.min_spacing_m - 1e-12);
  CHECK(layout_feasible(layout, cfg));

  CHECK(beams.total_power() == Catch::Approx(cfg.pmax_w).epsilon(1e-9));

  // Initial surrogate values come from the matched-filter start.
  RateReport rep = rate_report(sc, layout, beams, cfg);
  CHECK(state.tau == Catch::Approx(rep.min_sinr()).epsilon(1e-12));
  for (int k = 0; k < 2; ++k)
    CHECK(state.mu[k] == Catch::Approx(rep.delta[k].total()).epsilon(1e-9));
}

TEST_CASE("initial grid errors out when the spacing cannot fit") {
  SystemConfig cfg = load_config(R"({"region_size_wavelengths":0.4})");
  ChannelScenario sc = sample_scenario(cfg, 1);
  CHECK_THROWS_AS(init_state(sc, cfg), ConfigError);
}

TEST_CASE("single ideal user converges to the matched-filter optimum") {
  SystemConfig cfg = load_config("{}");
  cfg.n_users = 1;
  cfg.eta = 0.0;
  cfg.rho = {0.0};
  ChannelScenario sc = sample_scenario(cfg, 5);
  auto [layout, beams, state] = init_state(sc, cfg);
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  SrcrState srcr;
  srcr.alpha = cfg.srcr_alpha0;
  optimize_beamforming(state, srcr, sc, cfg, ws, beams, nullptr);

  const double hnorm2 = assemble_channel(sc, cfg, 0, layout).h.squaredNorm();
  const double optimum = cfg.pmax_w * hnorm2 / cfg.noise_w;
  CHECK(state.tau == Catch::Approx(optimum).epsilon(0.01));
  CHECK(beams.rank_one_ratio[0] >= 0.99);
}

TEST_CASE("beamforming trace is monotone and stays inside the power budget") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 11);
  auto [layout, beams, state] = init_state(sc, cfg);
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  SrcrState srcr;
  srcr.alpha = cfg.srcr_alpha0;
  BcdResult log;
  const double before = state.tau;
  optimize_beamforming(state, srcr, sc, cfg, ws, beams, &log);
  CHECK(state.tau >= before);
  double prev = 0.0;
  for (const TraceRecord& t : log.trace) {
    if (t.solver_status == "optimal") {
      CHECK(t.tau >= prev - 1e-9 * std::max(1.0, prev));
      prev = t.tau;
    }
  }
  CHECK(beams.total_power() <= cfg.pmax_w * (1.0 + 1e-6));
  for (double ratio : beams.rank_one_ratio) CHECK(ratio >= 0.99);
}

TEST_CASE("zero beams leave the positions untouched") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 13);
  auto [layout, beams, state] = init_state(sc, cfg);
  for (CVec& w : beams.vectors) w.setZero();
  for (CMat& w : beams.lifted) w.setZero();
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  state.tau = 0.0;
  state.mu.assign(2, (1.0 + cfg.rho_of(0)) * cfg.noise_w);

  AntennaLayout before = layout;
  SystemConfig quick = cfg;
  quick.max_inner_iters = 2;
  optimize_tx_positions(state, sc, quick, ws, layout, beams, nullptr);
  for (std::size_t n = 0; n < 4; ++n)
    CHECK((layout.tx_positions[n] - before.tx_positions[n]).norm() <= 1e-9);
  optimize_rx_positions(state, sc, quick, ws, layout, beams, nullptr);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK((layout.rx_positions[k] - before.rx_positions[k]).norm() <= 1e-9);
}

TEST_CASE("position loops only accept spacing-feasible improvements") {
  SystemConfig cfg = load_config("{}");
  cfg.max_inner_iters = 6;
  ChannelScenario sc = sample_scenario(cfg, 17);
  auto [layout, beams, state] = init_state(sc, cfg);
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  SrcrState srcr;
  srcr.alpha = cfg.srcr_alpha0;
  optimize_beamforming(state, srcr, sc, cfg, ws, beams, nullptr);

  BcdResult log;
  const double before = state.tau;
  optimize_tx_positions(state, sc, cfg, ws, layout, beams, &log);
  CHECK(state.tau >= before);
  CHECK(layout_feasible(layout, cfg, 1e-9));
  double prev = 0.0;
  for (const TraceRecord& t : log.trace) {
    CHECK(t.tau >= prev - 1e-9 * std::max(1.0, prev));
    prev = t.tau;
  }

  const double before_rx = state.tau;
  optimize_rx_positions(state, sc, cfg, ws, layout, beams, &log);
  CHECK(state.tau >= before_rx);
  CHECK(layout_feasible(layout, cfg, 1e-9));
}

TEST_CASE("moving one receive antenna leaves the other channels untouched") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 19);
  auto [layout, beams, state] = init_state(sc, cfg);
  const CMat h1_before = assemble_channel(sc, cfg, 1, layout).H;
  layout.rx_positions[0] = Vec2(0.1, -0.07);
  const CMat h1_after = assemble_channel(sc, cfg, 1, layout).H;
  CHECK((h1_before - h1_after).norm() == 0.0);
}

TEST_CASE("rank-one extraction recovers vectors and flags spread spectra") {
  Pcg32 rng(3);
  CVec v(4);
  for (int i = 0; i < 4; ++i) v[i] = rng.complex_normal(1.0);
  double ratio = 0.0;
  CVec w = extract_rank_one(CMat(v * v.adjoint()), &ratio);
  CHECK(ratio == Catch::Approx(1.0).epsilon(1e-10));
  // Equal up to a global phase.
  CHECK(std::abs(std::abs(w.dot(v)) - w.norm() * v.norm()) <= 1e-9 * v.squaredNorm());

  CVec flat = extract_rank_one(CMat::Identity(4, 4), &ratio);
  CHECK(ratio == Catch::Approx(0.25));
  CHECK_THROWS_AS(extract_rank_one(CMat::Zero(3, 3)), NumericalError);
}

TEST_CASE("full run: monotone trace, feasible result, mode dominance on one seed") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 7);

  BcdResult fpa = run_bcd(sc, cfg, BcdMode::fpa);
  BcdResult tfa = run_bcd(sc, cfg, BcdMode::tfa);
  BcdResult rfa = run_bcd(sc, cfg, BcdMode::rfa);
  BcdResult proposed = run_bcd(sc, cfg, BcdMode::proposed);

  for (const BcdResult* r : {&fpa, &tfa, &rfa, &proposed}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : r->tau_trace) {
      CHECK(t >= prev - 1e-6 * std::max(1.0, std::abs(prev)));
      prev = t;
    }
    CHECK(layout_feasible(r->layout, cfg, 1e-9));
    CHECK(r->beams.total_power() <= cfg.pmax_w * (1.0 + 1e-6));
    CHECK(r->outer_iters <= cfg.max_outer_iters);
  }

  CHECK(proposed.report.min_rate_bph >= tfa.report.min_rate_bph - 1e-6);
  CHECK(proposed.report.min_rate_bph >= rfa.report.min_rate_bph - 1e-6);
  CHECK(tfa.report.min_rate_bph >= fpa.report.min_rate_bph - 1e-6);
  CHECK(rfa.report.min_rate_bph >= fpa.report.min_rate_bph - 1e-6);

  // Fixed-antenna mode keeps only beamforming records.
  for (const TraceRecord& t : fpa.trace) CHECK(t.loop == "beam");
  CHECK(fpa.tx_iters == 0);
  CHECK(fpa.rx_iters == 0);
}

TEST_CASE("fixed-antenna mode matches a bare beamforming loop") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 23);
  BcdResult full = run_bcd(sc, cfg, BcdMode::fpa);

  auto [layout, beams, state] = init_state(sc, cfg);
  ChannelWorkspace ws = ChannelWorkspace::build(sc, cfg, layout);
  SrcrState srcr;
  srcr.alpha = cfg.srcr_alpha0;
  double prev = state.tau;
  for (int i = 0; i < cfg.max_outer_iters; ++i) {
    optimize_beamforming(state, srcr, sc, cfg, ws, beams, nullptr);
    if (i > 0 && rate_bph(state.tau) - rate_bph(prev) <= cfg.eps) break;
    prev = state.tau;
  }
  CHECK(full.report.min_rate_bph == Catch::Approx(rate_bph(state.tau)).margin(2.0 * cfg.eps));
}

TEST_CASE("receive positions are locally stationary at convergence") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario sc = sample_scenario(cfg, 29);
  BcdResult res = run_bcd(sc, cfg, BcdMode::proposed);
  for (int k = 0; k < cfg.n_users; ++k) {
    for (int axis = 0; axis < 2; ++axis) {
      for (double step : {1e-3, -1e-3}) {
        AntennaLayout probe = res.layout;
        probe.rx_positions[static_cast<std::size_t>(k)][axis] += step;
        if (!layout_feasible(probe, cfg)) continue;
        const RateReport moved = rate_report(sc, probe, res.beams, cfg);
        CHECK(moved.min_rate_bph <= res.report.min_rate_bph + 1e-3);
      }
    }
  }
}
