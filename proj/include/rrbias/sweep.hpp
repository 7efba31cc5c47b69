#pragma once

// (beta, gamma) grid sweeps: closed-form pair maps, exact CTMC maps and
// Monte Carlo maps.
//
// Monte Carlo seeding: replicate r of cell (i_beta, i_gamma) simulates a
// study with key derive_key(master_seed, {i_beta, i_gamma, r}). Work units
// are (cell, replicate) pairs whose results are stored by index, so the map
// does not depend on the number of workers or completion order.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rrbias/ctmc.hpp"
#include "rrbias/estimators.hpp"
#include "rrbias/simulator.hpp"

namespace rrbias {

/// Inclusive ranges min, min + step, ... <= max (with 1e-9 slack in steps).
struct GridSpec {
  double beta_min = -3.0, beta_max = 3.0, beta_step = 0.25;
  double gamma_min = -3.0, gamma_max = 3.0, gamma_step = 0.25;

  void validate() const;
  std::size_t beta_count() const;
  std::size_t gamma_count() const;
  double beta_at(std::size_t i) const { return beta_min + static_cast<double>(i) * beta_step; }
  double gamma_at(std::size_t i) const { return gamma_min + static_cast<double>(i) * gamma_step; }
  std::size_t cell_count() const { return beta_count() * gamma_count(); }
};

enum class MapMode { kExactPair, kCtmc, kMonteCarlo };

const char* to_string(MapMode m) noexcept;
std::optional<MapMode> parse_map_mode(std::string_view s) noexcept;

struct MapResult {
  GridSpec grid;
  std::vector<CellResult> cells;  // beta-major, so sorted by (beta, gamma)
  MapMode mode = MapMode::kExactPair;
  std::uint64_t fingerprint = 0;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::string> settings;  // canonical inputs behind the fingerprint

  const CellResult& at(std::size_t i_beta, std::size_t i_gamma) const {
    return cells[i_beta * grid.gamma_count() + i_gamma];
  }
};

/// FNV-1a 64 over the sorted "key=value\n" lines.
std::uint64_t config_fingerprint(const std::map<std::string, std::string>& settings);

/// Shortest round-trip decimal ("%.17g").
std::string format_double(double v);

/// Explicit request if > 0, else RRBIAS_WORKERS if set to a positive
/// integer, else the hardware concurrency.
std::size_t resolve_workers(std::size_t requested);

/// |log RR| below this is reported as exactly 0 in exact maps.
inline constexpr double kExactNullSnap = 1e-12;

/// Either a fixed observation time or a null incidence target to calibrate.
struct ObservationTime {
  double value = 450.0;
  bool calibrate = false;

  static ObservationTime fixed(double t) { return {t, false}; }
  static ObservationTime target(double incidence) { return {incidence, true}; }
};

/// Two-person clusters with x = (1, 0). A calibration target is solved once
/// for fixed size 2.
MapResult run_exact_map(const GridSpec& grid, double alpha, double omega, ObservationTime time,
                        std::size_t workers = 0);

MapResult run_ctmc_map(const GridSpec& grid, const ExactDesign& design, double alpha,
                       double omega, ObservationTime time,
                       Exclusion exclusion = Exclusion::kAllSubjects, std::size_t workers = 0);

struct McSweepOptions {
  std::size_t replicates = 200;
  Exclusion exclusion = Exclusion::kAllSubjects;
  Aggregator aggregator = Aggregator::kMeanOfLogs;
  double z_threshold = 2.0;
  bool continuity_correction = false;
  std::optional<IndexCaseDesign> index_case;  // two-phase design when set
  std::size_t workers = 0;
};

/// `base` supplies everything except beta and gamma, which vary over the
/// grid; base.master_seed is the master seed.
MapResult run_mc_sweep(const GridSpec& grid, const StudyConfig& base,
                       const McSweepOptions& options);

}  // namespace rrbias
