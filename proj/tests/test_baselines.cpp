#include <catch_amalgamated.hpp>

#include "fasopt/baselines.hpp"

using namespace fasopt;

TEST_CASE("scheme names round trip") {
  for (SchemeId id : {SchemeId::proposed, SchemeId::tfa, SchemeId::eas, SchemeId::rfa,
                      SchemeId::fpa})
    CHECK(parse_scheme(to_string(id)) == id);
  CHECK_THROWS_AS(parse_scheme("nope"), std::invalid_argument);
}

TEST_CASE("selection search enumerates every subset of the doubled grid") {
  SystemConfig cfg = load_config("{}");
  auto layouts = eas_candidate_layouts(cfg);
  CHECK(layouts.size() == 70);  // C(8, 4)
  for (const auto& layout : layouts) {
    REQUIRE(layout.size() == 4);
    for (std::size_t a = 0; a < layout.size(); ++a) {
      CHECK(std::abs(layout[a].x()) <= cfg.tx_region_halfwidth_m + 1e-12);
      CHECK(std::abs(layout[a].y()) <= cfg.tx_region_halfwidth_m + 1e-12);
      for (std::size_t b = a + 1; b < layout.size(); ++b)
        CHECK((layout[a] - layout[b]).norm() >= cfg.min_spacing_m - 1e-12);
    }
  }

  SystemConfig small = load_config("{}");
  small.n_tx_antennas = 2;
  small.finalize();
  CHECK(eas_candidate_layouts(small).size() == 6);  // C(4, 2)

  // The doubled grid must respect the spacing floor.
  SystemConfig tight = load_config(R"({"region_size_wavelengths":1.0})");
  CHECK_THROWS_AS(eas_candidate_layouts(tight), ConfigError);
}

TEST_CASE("selection search returns the best subset under shared scoring") {
  SystemConfig cfg = load_config("{}");
  cfg.max_inner_iters = 12;
  ChannelScenario sc = sample_scenario(cfg, 3);
  BcdResult best = run_scheme(SchemeId::eas, sc, cfg);

  // Any single subset scores no better than the search result.
  auto layouts = eas_candidate_layouts(cfg);
  for (std::size_t i = 0; i < layouts.size(); i += 23) {
    RunOptions opts;
    opts.initial_tx = layouts[i];
    BcdResult single = run_bcd(sc, cfg, BcdMode::fpa, opts);
    CHECK(best.report.min_rate_bph >= single.report.min_rate_bph - 1e-9);
  }
  CHECK(layout_feasible(best.layout, cfg, 1e-9));
}

TEST_CASE("identical seeds give identical scenarios across schemes") {
  SystemConfig cfg = load_config("{}");
  ChannelScenario a = sample_scenario(cfg, 21);
  ChannelScenario b = sample_scenario(cfg, 21);
  for (int k = 0; k < cfg.n_users; ++k)
    CHECK(a.path_response[k] == b.path_response[k]);

  // Scheme dispatch reuses the standard optimizer paths.
  cfg.max_inner_iters = 8;
  cfg.max_outer_iters = 3;
  BcdResult via_scheme = run_scheme(SchemeId::fpa, a, cfg);
  BcdResult via_mode = run_bcd(a, cfg, BcdMode::fpa);
  CHECK(via_scheme.report.min_rate_bph ==
        Catch::Approx(via_mode.report.min_rate_bph).margin(1e-12));
}
