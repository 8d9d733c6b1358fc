#include <catch_amalgamated.hpp>

#include "fasopt/config.hpp"

using namespace fasopt;

TEST_CASE("dBm conversion at the boundary") {
  SystemConfig cfg = load_config(R"({"pmax_dbm":30})");
  CHECK(cfg.pmax_w == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(load_config(R"({"pmax_dbm":20})").pmax_w == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("empty document takes the reference defaults") {
  SystemConfig cfg = load_config("{}");
  CHECK(cfg.n_tx_antennas == 4);
  CHECK(cfg.n_users == 2);
  CHECK(cfg.n_paths == 5);
  CHECK(cfg.eta == 0.2);
  CHECK(cfg.rho == std::vector<double>{0.2, 0.2});
  CHECK(cfg.wavelength_m == 0.125);
  CHECK(cfg.min_spacing_m == Catch::Approx(0.0625));
  CHECK(cfg.tx_region_halfwidth_m == Catch::Approx(0.25));
  CHECK(cfg.noise_w == Catch::Approx(1e-11).epsilon(1e-12));
  CHECK(cfg.ref_gain == Catch::Approx(1e-3).epsilon(1e-12));
  CHECK(cfg.pathloss_exponent == 2.8);
  CHECK(cfg.eps == 1e-3);
}

TEST_CASE("out-of-range values are rejected with the key name") {
  CHECK_THROWS_WITH(load_config(R"({"eta":1.5})"),
                    Catch::Matchers::ContainsSubstring("eta"));
  CHECK_THROWS_AS(load_config(R"({"n_users":1})"), ConfigError);
  CHECK_THROWS_AS(load_config(R"({"rho":[0.1]})"), ConfigError);  // wrong length for K=2
  CHECK_THROWS_AS(load_config(R"({"rho":-0.1})"), ConfigError);
}

TEST_CASE("malformed and unknown-key documents fail") {
  CHECK_THROWS_AS(load_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config(R"({"n_tx_antenas":4})"), ConfigError);
  CHECK_THROWS_AS(load_config(R"([1,2])"), ConfigError);
}

TEST_CASE("serialize/load round trip reproduces the config exactly") {
  SystemConfig cfg = load_config(
      R"({"pmax_dbm":17.3,"eta":0.07,"rho":[0.03,0.4],"n_paths":3,"seed":99,
          "user_area_m":[[10,-5],[30,5]],"eps":2e-4})");
  SystemConfig again = load_config(serialize_config(cfg));
  CHECK(again == cfg);
  SystemConfig defaults = load_config("{}");
  CHECK(load_config(serialize_config(defaults)) == defaults);
}
