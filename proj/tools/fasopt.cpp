// Command-line front end: single runs, parameter sweeps, and the validation
// suite. See README.md for the file formats.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fasopt/harness.hpp"
#include "fasopt/validate.hpp"

namespace {

fasopt::SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fasopt::ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fasopt::load_config(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min rate optimizer for position-reconfigurable antennas"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::string scheme = "proposed";

  CLI::App* run = app.add_subcommand("run", "run one scenario and write trace/result files");
  run->add_option("--config", config_path, "JSON configuration file")->required();
  run->add_option("--seed", seed, "scenario seed");
  run->add_option("--scheme", scheme, "proposed|tfa|eas|rfa|fpa");
  run->add_option("--out", out_dir, "output directory");

  std::string param;
  std::vector<double> values;
  std::vector<std::string> scheme_names;
  int sweep_seeds = 20;
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep and write CSV tables");
  sweep->add_option("--config", config_path, "JSON configuration file")->required();
  sweep->add_option("--param", param,
                    "pmax_dbm|n_tx_antennas|n_paths|region_size_wavelengths|eta")
      ->required();
  sweep->add_option("--values", values, "comma-separated parameter values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--schemes", scheme_names, "comma-separated scheme list")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "number of paired seeds");
  sweep->add_option("--out", out_dir, "output directory");

  bool strict = false;
  int validate_seeds = 5;
  std::string validate_out;
  CLI::App* validate = app.add_subcommand("validate", "run the property suites");
  validate->add_flag("--strict", strict, "halve every tolerance");
  validate->add_option("--seeds", validate_seeds, "random states per suite");
  validate->add_option("--out", validate_out, "directory for the JSON report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const fasopt::SystemConfig cfg = load_config_file(config_path);
      const fasopt::BcdResult result =
          fasopt::cmd_run(cfg, seed, fasopt::parse_scheme(scheme), out_dir);
      std::cout << "min_rate_bph " << result.report.min_rate_bph << " outer_iters "
                << result.outer_iters << " termination " << result.termination << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const fasopt::SystemConfig cfg = load_config_file(config_path);
      fasopt::SweepSpec spec;
      spec.parameter = param;
      spec.values = values;
      for (const std::string& s : scheme_names) spec.schemes.push_back(fasopt::parse_scheme(s));
      spec.n_seeds = sweep_seeds;
      spec.out_dir = out_dir;
      if (spec.values.empty() || spec.schemes.empty())
        throw fasopt::ConfigError("sweep needs non-empty value and scheme lists");
      fasopt::cmd_sweep(cfg, spec);
      std::cout << "wrote " << out_dir << "/summary.csv and " << out_dir << "/aggregate.csv\n";
      return 0;
    }
    // validate
    fasopt::ValidationOptions opts;
    opts.seeds = validate_seeds;
    opts.tol_scale = strict ? 0.5 : 1.0;
    const std::vector<fasopt::PropertyResult> results = fasopt::run_validation(opts);
    int failures = 0;
    nlohmann::json report = nlohmann::json::array();
    for (const fasopt::PropertyResult& r : results) {
      std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
      if (!r.pass) ++failures;
      report.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    }
    if (!validate_out.empty()) {
      std::filesystem::create_directories(validate_out);
      std::ofstream out(validate_out + "/validate.json");
      out << report.dump(2) << "\n";
    }
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
