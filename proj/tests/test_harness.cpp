#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fasopt/harness.hpp"
#include "fasopt/validate.hpp"

using namespace fasopt;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) parts.push_back(item);
  return parts;
}

}  // namespace

TEST_CASE("single run writes a monotone trace and a config echo") {
  SystemConfig cfg = load_config("{}");
  cfg.max_inner_iters = 10;
  cfg.max_outer_iters = 5;
  const std::string dir = std::filesystem::temp_directory_path() / "fasopt_run_test";
  std::filesystem::remove_all(dir);
  BcdResult result = cmd_run(cfg, 7, SchemeId::proposed, dir);

  auto lines = read_lines(dir + "/trace.csv");
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "iter,loop,tau,min_rate_bph,solver_status");
  double prev = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto parts = split(lines[i], ',');
    REQUIRE(parts.size() == 5);
    const double rate = std::stod(parts[3]);
    CHECK(rate >= prev - 1e-9);
    prev = rate;
    CHECK((parts[1] == "beam" || parts[1] == "tx" || parts[1] == "rx"));
  }

  std::ifstream jf(dir + "/result.json");
  nlohmann::json j = nlohmann::json::parse(jf);
  CHECK(j["min_rate_bph"].get<double>() == Catch::Approx(result.report.min_rate_bph));
  // The echoed config parses back to the exact resolved configuration.
  SystemConfig echoed = load_config(j["config"].dump());
  CHECK(echoed == cfg);
  CHECK(j["seed"].get<std::uint64_t>() == 7);
}

TEST_CASE("fixed-antenna runs only carry beamforming rows") {
  SystemConfig cfg = load_config("{}");
  cfg.max_inner_iters = 8;
  cfg.max_outer_iters = 3;
  const std::string dir = std::filesystem::temp_directory_path() / "fasopt_run_fpa";
  std::filesystem::remove_all(dir);
  cmd_run(cfg, 3, SchemeId::fpa, dir);
  auto lines = read_lines(dir + "/trace.csv");
  for (std::size_t i = 1; i < lines.size(); ++i) CHECK(split(lines[i], ',')[1] == "beam");
}

TEST_CASE("sweeps produce one row per cell plus aggregates, independent of workers") {
  SystemConfig cfg = load_config("{}");
  cfg.max_inner_iters = 6;
  cfg.max_outer_iters = 2;
  SweepSpec spec;
  spec.parameter = "eta";
  spec.values = {0.05, 0.2};
  spec.schemes = {SchemeId::fpa, SchemeId::proposed};
  spec.n_seeds = 2;

  const std::string dir1 = std::filesystem::temp_directory_path() / "fasopt_sweep1";
  const std::string dir2 = std::filesystem::temp_directory_path() / "fasopt_sweep2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  spec.out_dir = dir1;
  setenv("FASOPT_WORKERS", "1", 1);
  cmd_sweep(cfg, spec);
  spec.out_dir = dir2;
  setenv("FASOPT_WORKERS", "2", 1);
  cmd_sweep(cfg, spec);
  unsetenv("FASOPT_WORKERS");

  auto rows1 = read_lines(dir1 + "/summary.csv");
  auto rows2 = read_lines(dir2 + "/summary.csv");
  REQUIRE(rows1.size() == 1 + 2 * 2 * 2);
  REQUIRE(rows1.size() == rows2.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    // Every column except wall time is deterministic.
    auto a = split(rows1[i], ',');
    auto b = split(rows2[i], ',');
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c)
      if (i == 0 || c != 6) CHECK(a[c] == b[c]);
  }

  auto agg = read_lines(dir1 + "/aggregate.csv");
  REQUIRE(agg.size() == 1 + 2 * 2);  // schemes x values
  CHECK(agg[0] == "scheme,param,value,n,mean_min_rate_bph,stderr_min_rate_bph");

  // Impairments only hurt: per scheme the mean at eta 0.05 >= mean at 0.2.
  double mean_low = 0, mean_high = 0;
  for (std::size_t i = 1; i < agg.size(); ++i) {
    auto parts = split(agg[i], ',');
    if (parts[0] == "proposed" && parts[2] == "0.05") mean_low = std::stod(parts[4]);
    if (parts[0] == "proposed" && parts[2] == "0.2") mean_high = std::stod(parts[4]);
  }
  CHECK(mean_low >= mean_high);
}

TEST_CASE("unknown sweep parameters are rejected") {
  SystemConfig cfg = load_config("{}");
  SweepSpec spec;
  spec.parameter = "bogus";
  spec.values = {1.0};
  spec.schemes = {SchemeId::fpa};
  spec.n_seeds = 1;
  spec.out_dir = std::filesystem::temp_directory_path() / "fasopt_sweep_bad";
  cmd_sweep(cfg, spec);  // cell failure is recorded, not thrown
  auto rows = read_lines(spec.out_dir + "/summary.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].find("error: unknown sweep parameter") != std::string::npos);
}

TEST_CASE("validation registry passes at the default profile") {
  ValidationOptions opts;
  opts.seeds = 2;
  auto results = run_validation(opts);
  REQUIRE(results.size() >= 6);
  for (const PropertyResult& r : results) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }

  // The strict profile reports the same verdicts at this scale.
  ValidationOptions strict;
  strict.seeds = 2;
  strict.tol_scale = 0.5;
  auto strict_results = run_validation(strict);
  REQUIRE(strict_results.size() == results.size());
  for (std::size_t i = 0; i < results.size(); ++i)
    CHECK(strict_results[i].pass == results[i].pass);
}
