#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fasopt/baselines.hpp"

namespace fasopt {

/// Parameter sweep request: one axis, a value list, schemes, and paired seeds.
struct SweepSpec {
  std::string parameter;  // pmax_dbm | n_tx_antennas | n_paths | region_size_wavelengths | eta
  std::vector<double> values;
  std::vector<SchemeId> schemes;
  int n_seeds = 20;
  std::string out_dir;
};

namespace harness_detail {

inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void apply_parameter(SystemConfig& cfg, const std::string& name, double value) {
  if (name == "pmax_dbm") {
    cfg.pmax_dbm = value;
  } else if (name == "n_tx_antennas") {
    cfg.n_tx_antennas = static_cast<int>(std::lround(value));
  } else if (name == "n_paths") {
    cfg.n_paths = static_cast<int>(std::lround(value));
  } else if (name == "region_size_wavelengths") {
    cfg.region_size_wavelengths = value;
  } else if (name == "eta") {
    // The receive impairment level tracks the transmit one in every
    // reference experiment, so the sweep moves them together.
    cfg.eta = value;
    cfg.rho.assign(static_cast<std::size_t>(cfg.n_users), value);
  } else {
    throw ConfigError("unknown sweep parameter: " + name);
  }
  cfg.finalize();
  cfg.validate();
}

}  // namespace harness_detail

inline nlohmann::json result_to_json(const BcdResult& r, const SystemConfig& cfg) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(serialize_config(cfg));
  j["min_rate_bph"] = r.report.min_rate_bph;
  j["rate_bph"] = r.report.rate_bph;
  j["sinr"] = r.report.sinr;
  j["rank_one_ratio"] = r.beams.rank_one_ratio;
  j["total_power_w"] = r.beams.total_power();
  j["outer_iters"] = r.outer_iters;
  j["beam_iters"] = r.beam_iters;
  j["tx_iters"] = r.tx_iters;
  j["rx_iters"] = r.rx_iters;
  j["termination"] = r.termination;
  j["notes"] = r.notes;
  j["tau_trace"] = r.tau_trace;
  auto pos = nlohmann::json::array();
  for (const Vec2& t : r.layout.tx_positions) pos.push_back({t.x(), t.y()});
  j["tx_positions_m"] = pos;
  auto rx = nlohmann::json::array();
  for (const Vec2& t : r.layout.rx_positions) rx.push_back({t.x(), t.y()});
  j["rx_positions_m"] = rx;
  auto breakdown = nlohmann::json::array();
  for (const DeltaBreakdown& d : r.report.delta)
    breakdown.push_back({{"multiuser_interference_w", d.multiuser_interference},
                         {"cu_distortion_w", d.cu_distortion},
                         {"bs_distortion_w", d.bs_distortion},
                         {"thermal_w", d.thermal}});
  j["denominator_breakdown"] = breakdown;
  return j;
}

/// Runs one scenario/scheme and writes trace.csv + result.json into out_dir.
inline BcdResult cmd_run(const SystemConfig& cfg, std::uint64_t seed, SchemeId scheme,
                         const std::string& out_dir) {
  const ChannelScenario sc = sample_scenario(cfg, seed);
  BcdResult result = run_scheme(scheme, sc, cfg);

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream trace(out_dir + "/trace.csv");
    trace << "iter,loop,tau,min_rate_bph,solver_status\n";
    for (const TraceRecord& t : result.trace)
      trace << t.iter << "," << t.loop << "," << harness_detail::fmt9(t.tau) << ","
            << harness_detail::fmt9(t.min_rate_bph) << "," << t.solver_status << "\n";
  }
  {
    nlohmann::json j = result_to_json(result, cfg);
    j["seed"] = seed;
    j["scheme"] = to_string(scheme);
    std::ofstream out(out_dir + "/result.json");
    out << j.dump(2) << "\n";
  }
  return result;
}

struct SweepCell {
  SchemeId scheme;
  double value = 0.0;
  std::uint64_t seed = 0;
  double min_rate_bph = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

/// Executes the sweep with a bounded worker pool. Cell results are collected
/// into a fixed-order table, so every output except wall_ms is deterministic
/// for a given (config, spec) regardless of the worker count.
inline std::vector<SweepCell> run_sweep_cells(const SystemConfig& base, const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  for (SchemeId scheme : spec.schemes)
    for (double value : spec.values)
      for (int s = 0; s < spec.n_seeds; ++s) {
        SweepCell cell;
        cell.scheme = scheme;
        cell.value = value;
        cell.seed = base.seed + static_cast<std::uint64_t>(s);
        cells.push_back(cell);
      }

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      SweepCell& cell = cells[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        SystemConfig cfg = base;
        harness_detail::apply_parameter(cfg, spec.parameter, cell.value);
        const ChannelScenario sc = sample_scenario(cfg, cell.seed);
        const BcdResult r = run_scheme(cell.scheme, sc, cfg);
        cell.min_rate_bph = r.report.min_rate_bph;
        cell.iters = r.outer_iters;
      } catch (const std::exception& e) {
        cell.status = std::string("error: ") + e.what();
      }
      cell.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
    }
  };
  const int workers = std::min<int>(worker_count(), std::max<int>(1, cells.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  return cells;
}

/// Writes summary.csv (one row per cell) and aggregate.csv (per scheme/value
/// means with standard errors). Failed cells keep their status message.
inline void cmd_sweep(const SystemConfig& base, const SweepSpec& spec) {
  const std::vector<SweepCell> cells = run_sweep_cells(base, spec);
  std::filesystem::create_directories(spec.out_dir);
  {
    std::ofstream out(spec.out_dir + "/summary.csv");
    out << "scheme,param,value,seed,min_rate_bph,iters,wall_ms,status\n";
    for (const SweepCell& c : cells)
      out << to_string(c.scheme) << "," << spec.parameter << ","
          << harness_detail::fmt9(c.value) << "," << c.seed << ","
          << harness_detail::fmt9(c.min_rate_bph) << "," << c.iters << ","
          << harness_detail::fmt9(c.wall_ms) << "," << c.status << "\n";
  }
  {
    std::ofstream out(spec.out_dir + "/aggregate.csv");
    out << "scheme,param,value,n,mean_min_rate_bph,stderr_min_rate_bph\n";
    for (SchemeId scheme : spec.schemes)
      for (double value : spec.values) {
        double sum = 0.0, sumsq = 0.0;
        int n = 0;
        for (const SweepCell& c : cells) {
          if (c.scheme != scheme || c.value != value || c.status != "ok") continue;
          sum += c.min_rate_bph;
          sumsq += c.min_rate_bph * c.min_rate_bph;
          ++n;
        }
        const double mean = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
        const double se =
            n > 1 ? std::sqrt(std::max(0.0, sumsq / n - mean * mean) / (n - 1)) : 0.0;
        out << to_string(scheme) << "," << spec.parameter << ","
            << harness_detail::fmt9(value) << "," << n << "," << harness_detail::fmt9(mean)
            << "," << harness_detail::fmt9(se) << "\n";
      }
  }
}

}  // namespace fasopt
