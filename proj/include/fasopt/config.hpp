#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fasopt/common.hpp"

namespace fasopt {

/// All physical and algorithmic parameters of a run. Boundary fields keep the
/// units they are configured in (dBm/dB/wavelengths); finalize() derives the
/// linear-unit quantities every other module works with. Instances are
/// immutable after construction and safe to share across threads.
struct SystemConfig {
  // Boundary fields (as configured).
  int n_tx_antennas = 4;                  // N
  int n_users = 2;                        // K
  int n_paths = 5;                        // L, transmit and receive alike
  double wavelength_m = 0.125;
  double min_spacing_wavelengths = 0.5;   // D / lambda
  double region_size_wavelengths = 4.0;   // A / lambda, square regions [-A/2, A/2]^2
  double pmax_dbm = 30.0;
  double noise_dbm = -80.0;
  double eta = 0.2;                       // transmit hardware-impairment coefficient
  std::vector<double> rho;                // per-user receive HI coefficients; sized K by finalize()
  double pathloss_exponent = 2.8;
  double ref_gain_db = -30.0;             // average channel gain at d0 = 1 m
  std::array<std::array<double, 2>, 2> user_area_m{{{20.0, 0.0}, {40.0, -20.0}}};
  double eps = 1e-3;                      // outer min-rate gain threshold (bits/s/Hz)
  double eps_w = 1e-3;                    // beamforming loop threshold
  double eps_t = 1e-3;                    // transmit-position loop threshold
  double eps_r = 1e-3;                    // receive-position loop threshold
  int max_outer_iters = 50;
  int max_inner_iters = 100;
  double srcr_alpha0 = 0.1;
  std::uint64_t seed = 1;

  // Derived linear-unit fields (set by finalize()).
  double pmax_w = 1.0;
  double noise_w = 1e-11;
  double ref_gain = 1e-3;
  double min_spacing_m = 0.0625;
  double tx_region_halfwidth_m = 0.25;
  double rx_region_halfwidth_m = 0.25;

  double rho_of(int k) const { return rho.at(static_cast<std::size_t>(k)); }

  void finalize() {
    pmax_w = dbm_to_watts(pmax_dbm);
    noise_w = dbm_to_watts(noise_dbm);
    ref_gain = db_to_linear(ref_gain_db);
    min_spacing_m = min_spacing_wavelengths * wavelength_m;
    tx_region_halfwidth_m = 0.5 * region_size_wavelengths * wavelength_m;
    rx_region_halfwidth_m = tx_region_halfwidth_m;
    if (rho.empty()) rho.assign(static_cast<std::size_t>(n_users), eta);
  }

  void validate() const {
    auto fail = [](const std::string& key, const std::string& bound) {
      throw ConfigError("config value out of range: " + key + " must be " + bound);
    };
    if (n_tx_antennas < 2) fail("n_tx_antennas", ">= 2");
    if (n_users < 2) fail("n_users", ">= 2");
    if (n_paths < 1) fail("n_paths", ">= 1");
    if (!(wavelength_m > 0)) fail("wavelength_m", "> 0");
    if (!(min_spacing_wavelengths > 0)) fail("min_spacing_wavelengths", "> 0");
    if (!(region_size_wavelengths > 0)) fail("region_size_wavelengths", "> 0");
    if (!(dbm_to_watts(pmax_dbm) > 0)) fail("pmax_dbm", "finite");
    if (!(dbm_to_watts(noise_dbm) > 0)) fail("noise_dbm", "finite");
    if (eta < 0.0 || eta > 1.0) fail("eta", "in [0,1]");
    if (rho.size() != static_cast<std::size_t>(n_users)) fail("rho", "scalar or length n_users");
    for (double r : rho)
      if (r < 0.0 || r > 1.0) fail("rho", "in [0,1]");
    if (!(pathloss_exponent > 0)) fail("pathloss_exponent", "> 0");
    if (!(eps > 0) || !(eps_w > 0) || !(eps_t > 0) || !(eps_r > 0)) fail("eps", "> 0");
    if (max_outer_iters < 1) fail("max_outer_iters", ">= 1");
    if (max_inner_iters < 1) fail("max_inner_iters", ">= 1");
    if (!(srcr_alpha0 > 0)) fail("srcr_alpha0", "> 0");
    if (user_area_m[0][0] == user_area_m[1][0] || user_area_m[0][1] == user_area_m[1][1])
      fail("user_area_m", "a non-degenerate rectangle");
  }

  bool operator==(const SystemConfig&) const = default;
};

namespace detail {
inline const char* const kConfigKeys[] = {
    "n_tx_antennas", "n_users",       "n_paths",       "wavelength_m",
    "min_spacing_wavelengths",        "region_size_wavelengths",
    "pmax_dbm",      "noise_dbm",     "eta",           "rho",
    "pathloss_exponent",              "ref_gain_db",   "user_area_m",
    "eps",           "eps_w",         "eps_t",         "eps_r",
    "max_outer_iters",                "max_inner_iters",
    "srcr_alpha0",   "seed"};
}  // namespace detail

/// Parses a JSON configuration document. Missing keys take the defaults above;
/// unknown keys are rejected so typos cannot silently fall back to defaults.
inline SystemConfig load_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration document: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration document must be a JSON object");

  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : detail::kConfigKeys)
      if (it.key() == key) known = true;
    if (!known) throw ConfigError("unknown configuration key: " + it.key());
  }

  SystemConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        field = j.at(key).get<std::decay_t<decltype(field)>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("configuration key has wrong type: ") + key);
      }
    }
  };
  get("n_tx_antennas", cfg.n_tx_antennas);
  get("n_users", cfg.n_users);
  get("n_paths", cfg.n_paths);
  get("wavelength_m", cfg.wavelength_m);
  get("min_spacing_wavelengths", cfg.min_spacing_wavelengths);
  get("region_size_wavelengths", cfg.region_size_wavelengths);
  get("pmax_dbm", cfg.pmax_dbm);
  get("noise_dbm", cfg.noise_dbm);
  get("eta", cfg.eta);
  if (j.contains("rho")) {
    const auto& r = j.at("rho");
    if (r.is_number()) {
      cfg.rho.assign(static_cast<std::size_t>(cfg.n_users), r.get<double>());
    } else if (r.is_array()) {
      cfg.rho = r.get<std::vector<double>>();
    } else {
      throw ConfigError("configuration key has wrong type: rho");
    }
  }
  get("pathloss_exponent", cfg.pathloss_exponent);
  get("ref_gain_db", cfg.ref_gain_db);
  if (j.contains("user_area_m")) {
    auto a = j.at("user_area_m").get<std::array<std::array<double, 2>, 2>>();
    cfg.user_area_m = a;
  }
  get("eps", cfg.eps);
  get("eps_w", cfg.eps_w);
  get("eps_t", cfg.eps_t);
  get("eps_r", cfg.eps_r);
  get("max_outer_iters", cfg.max_outer_iters);
  get("max_inner_iters", cfg.max_inner_iters);
  get("srcr_alpha0", cfg.srcr_alpha0);
  get("seed", cfg.seed);

  cfg.finalize();
  cfg.validate();
  return cfg;
}

/// Emits the full configuration in boundary units; load_config(serialize_config(c))
/// reproduces c exactly (raw fields are emitted verbatim at full precision).
inline std::string serialize_config(const SystemConfig& cfg) {
  nlohmann::json j;
  j["n_tx_antennas"] = cfg.n_tx_antennas;
  j["n_users"] = cfg.n_users;
  j["n_paths"] = cfg.n_paths;
  j["wavelength_m"] = cfg.wavelength_m;
  j["min_spacing_wavelengths"] = cfg.min_spacing_wavelengths;
  j["region_size_wavelengths"] = cfg.region_size_wavelengths;
  j["pmax_dbm"] = cfg.pmax_dbm;
  j["noise_dbm"] = cfg.noise_dbm;
  j["eta"] = cfg.eta;
  j["rho"] = cfg.rho;
  j["pathloss_exponent"] = cfg.pathloss_exponent;
  j["ref_gain_db"] = cfg.ref_gain_db;
  j["user_area_m"] = cfg.user_area_m;
  j["eps"] = cfg.eps;
  j["eps_w"] = cfg.eps_w;
  j["eps_t"] = cfg.eps_t;
  j["eps_r"] = cfg.eps_r;
  j["max_outer_iters"] = cfg.max_outer_iters;
  j["max_inner_iters"] = cfg.max_inner_iters;
  j["srcr_alpha0"] = cfg.srcr_alpha0;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

}  // namespace fasopt
