#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "fasopt/bcd.hpp"

namespace fasopt {

enum class SchemeId { proposed, tfa, eas, rfa, fpa };

inline const char* to_string(SchemeId s) {
  switch (s) {
    case SchemeId::proposed: return "proposed";
    case SchemeId::tfa: return "tfa";
    case SchemeId::eas: return "eas";
    case SchemeId::rfa: return "rfa";
    case SchemeId::fpa: return "fpa";
  }
  return "?";
}

inline SchemeId parse_scheme(const std::string& name) {
  if (name == "proposed") return SchemeId::proposed;
  if (name == "tfa") return SchemeId::tfa;
  if (name == "eas") return SchemeId::eas;
  if (name == "rfa") return SchemeId::rfa;
  if (name == "fpa") return SchemeId::fpa;
  throw std::invalid_argument("unknown scheme: " + name);
}

inline int worker_count() {
  if (const char* env = std::getenv("FASOPT_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace baseline_detail {

/// Uniform planar array of 2N elements spanning the transmit region with the
/// largest pitch that fits; the selection pool for the exhaustive search.
inline std::vector<Vec2> selection_grid(const SystemConfig& cfg) {
  const int total = 2 * cfg.n_tx_antennas;
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(total)))));
  const int cols = (total + rows - 1) / rows;
  const double width = 2.0 * cfg.tx_region_halfwidth_m;
  const double pitch_x = cols > 1 ? width / (cols - 1) : 0.0;
  const double pitch_y = rows > 1 ? width / (rows - 1) : 0.0;
  if ((cols > 1 && pitch_x < cfg.min_spacing_m - 1e-12) ||
      (rows > 1 && pitch_y < cfg.min_spacing_m - 1e-12))
    throw ConfigError("selection grid of " + std::to_string(total) +
                      " elements violates the minimum spacing");
  std::vector<Vec2> grid;
  grid.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    grid.emplace_back(-0.5 * (cols - 1) * pitch_x + c * pitch_x,
                      -0.5 * (rows - 1) * pitch_y + r * pitch_y);
  }
  return grid;
}

inline std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(pick);
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

}  // namespace baseline_detail

/// All candidate transmit layouts of the exhaustive-selection baseline:
/// every N-subset of the 2N-element selection grid.
inline std::vector<std::vector<Vec2>> eas_candidate_layouts(const SystemConfig& cfg) {
  const std::vector<Vec2> grid = baseline_detail::selection_grid(cfg);
  const auto subsets =
      baseline_detail::k_subsets(static_cast<int>(grid.size()), cfg.n_tx_antennas);
  std::vector<std::vector<Vec2>> layouts;
  layouts.reserve(subsets.size());
  for (const auto& pick : subsets) {
    std::vector<Vec2> layout;
    layout.reserve(pick.size());
    for (int i : pick) layout.push_back(grid[static_cast<std::size_t>(i)]);
    layouts.push_back(std::move(layout));
  }
  return layouts;
}

/// Shared scoring for the comparison schemes. The selection baseline runs the
/// beamforming-only optimizer on every candidate subset concurrently and
/// returns the best subset's result; ties break on the lowest subset index so
/// results are independent of scheduling.
inline BcdResult run_scheme(SchemeId id, const ChannelScenario& sc, const SystemConfig& cfg) {
  switch (id) {
    case SchemeId::proposed: return run_bcd(sc, cfg, BcdMode::proposed);
    case SchemeId::tfa: return run_bcd(sc, cfg, BcdMode::tfa);
    case SchemeId::rfa: return run_bcd(sc, cfg, BcdMode::rfa);
    case SchemeId::fpa: return run_bcd(sc, cfg, BcdMode::fpa);
    case SchemeId::eas: break;
  }

  const std::vector<std::vector<Vec2>> layouts = eas_candidate_layouts(cfg);
  std::vector<BcdResult> results(layouts.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::min<int>(worker_count(), static_cast<int>(layouts.size()));
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= layouts.size()) break;
      RunOptions opts;
      opts.initial_tx = layouts[i];
      results[i] = run_bcd(sc, cfg, BcdMode::fpa, opts);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].report.min_rate_bph > results[best].report.min_rate_bph) best = i;
  BcdResult out = std::move(results[best]);
  out.notes.push_back("selection search over " + std::to_string(layouts.size()) +
                      " candidate subsets, best index " + std::to_string(best));
  return out;
}

}  // namespace fasopt
