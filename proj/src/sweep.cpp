#include "rrbias/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include "rrbias/calibration.hpp"
#include "rrbias/errors.hpp"
#include "rrbias/exact_pair.hpp"

namespace rrbias {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxCells = 1'000'000;

std::size_t axis_count(double lo, double hi, double step, const char* lo_field,
                       const char* step_field) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError(lo_field, "must be finite");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError(step_field, "must be > 0");
  if (hi < lo) throw ConfigError(lo_field, "must not exceed the maximum");
  const double steps = std::floor((hi - lo) / step + 1e-9);
  if (steps >= static_cast<double>(kMaxCells)) throw ConfigError(step_field, "too many grid points");
  return static_cast<std::size_t>(steps) + 1;
}

// Runs body(i) for i in [0, count) on up to `workers` threads. The body must
// not throw and must only write to slot i of its outputs.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body body) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
}

// Short status code for a per-cell failure; the CSV status column carries it.
std::string failure_status(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const SizeLimitError&) {
    return "size-limit";
  } catch (const UndefinedError&) {
    return "undefined";
  } catch (const NumericalError&) {
    return "numerical-error";
  } catch (const NotApplicableError&) {
    return "not-applicable";
  } catch (const ProgressError&) {
    return "progress-failure";
  } catch (const ConfigError&) {
    return "config-error";
  } catch (...) {
    return "error";
  }
}

CellResult failed_cell(double beta, double gamma, std::string status, std::size_t dropped) {
  CellResult c;
  c.beta = beta;
  c.gamma = gamma;
  c.mean_log_rr = kNaN;
  c.se = kNaN;
  c.replicates_used = 0;
  c.replicates_dropped = dropped;
  c.classification = Direction::kIndeterminate;
  c.status = std::move(status);
  return c;
}

CellResult exact_cell(double beta, double gamma, double rr) {
  if (!(rr > 0.0) || !std::isfinite(rr)) return failed_cell(beta, gamma, "undefined", 1);
  double log_rr = std::log(rr);
  if (std::fabs(log_rr) <= kExactNullSnap) log_rr = 0.0;
  CellResult c;
  c.beta = beta;
  c.gamma = gamma;
  c.mean_log_rr = log_rr;
  c.se = 0.0;
  c.replicates_used = 1;
  c.replicates_dropped = 0;
  c.classification = classify_direction(beta, log_rr, 0.0);
  return c;
}

void add_grid_settings(std::map<std::string, std::string>& s, const GridSpec& g) {
  s["grid.beta_min"] = format_double(g.beta_min);
  s["grid.beta_max"] = format_double(g.beta_max);
  s["grid.beta_step"] = format_double(g.beta_step);
  s["grid.gamma_min"] = format_double(g.gamma_min);
  s["grid.gamma_max"] = format_double(g.gamma_max);
  s["grid.gamma_step"] = format_double(g.gamma_step);
}

double resolve_time(ObservationTime time, double alpha, double omega, const ClusterSizeDist& size,
                    std::map<std::string, std::string>& settings) {
  if (time.calibrate) {
    settings["target_incidence"] = format_double(time.value);
    const double t = calibrate_T(time.value, alpha, omega, size);
    settings["t"] = format_double(t);
    return t;
  }
  if (!(time.value > 0.0) || !std::isfinite(time.value)) {
    throw ConfigError("t", "must be finite and > 0");
  }
  settings["t"] = format_double(time.value);
  return time.value;
}

template <class Eval>
MapResult run_exact_cells(const GridSpec& grid, MapMode mode,
                          std::map<std::string, std::string> settings, std::size_t workers,
                          Eval eval) {
  MapResult map;
  map.grid = grid;
  map.mode = mode;
  settings["mode"] = to_string(mode);
  add_grid_settings(settings, grid);
  map.settings = std::move(settings);
  map.fingerprint = config_fingerprint(map.settings);

  const std::size_t ng = grid.gamma_count();
  map.cells.resize(grid.cell_count());
  parallel_for(map.cells.size(), resolve_workers(workers), [&](std::size_t i) {
    const double beta = grid.beta_at(i / ng);
    const double gamma = grid.gamma_at(i % ng);
    try {
      map.cells[i] = exact_cell(beta, gamma, eval(beta, gamma));
    } catch (...) {
      map.cells[i] = failed_cell(beta, gamma, failure_status(std::current_exception()), 1);
    }
  });
  return map;
}

}  // namespace

void GridSpec::validate() const {
  const std::size_t nb = beta_count();
  const std::size_t ng = gamma_count();
  if (nb * ng > kMaxCells) throw ConfigError("grid.beta_step", "too many grid cells");
}

std::size_t GridSpec::beta_count() const {
  return axis_count(beta_min, beta_max, beta_step, "grid.beta_min", "grid.beta_step");
}

std::size_t GridSpec::gamma_count() const {
  return axis_count(gamma_min, gamma_max, gamma_step, "grid.gamma_min", "grid.gamma_step");
}

const char* to_string(MapMode m) noexcept {
  switch (m) {
    case MapMode::kExactPair: return "exact-pair";
    case MapMode::kCtmc: return "ctmc";
    case MapMode::kMonteCarlo: return "monte-carlo";
  }
  return "?";
}

std::optional<MapMode> parse_map_mode(std::string_view s) noexcept {
  for (MapMode m : {MapMode::kExactPair, MapMode::kCtmc, MapMode::kMonteCarlo}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::uint64_t config_fingerprint(const std::map<std::string, std::string>& settings) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [key, value] : settings) {
    feed(key);
    feed("=");
    feed(value);
    feed("\n");
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RRBIAS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MapResult run_exact_map(const GridSpec& grid, double alpha, double omega, ObservationTime time,
                        std::size_t workers) {
  grid.validate();
  EpidemicParams{alpha, omega, 0.0, 0.0}.validate();
  if (!(alpha > 0.0)) throw ConfigError("alpha", "must be > 0 for exact maps");
  std::map<std::string, std::string> settings;
  settings["alpha"] = format_double(alpha);
  settings["omega"] = format_double(omega);
  const double t = resolve_time(time, alpha, omega, FixedSize{2}, settings);
  return run_exact_cells(grid, MapMode::kExactPair, std::move(settings), workers,
                         [&](double beta, double gamma) {
                           return exact_risk_ratio({alpha, omega, beta, gamma}, t);
                         });
}

MapResult run_ctmc_map(const GridSpec& grid, const ExactDesign& design, double alpha,
                       double omega, ObservationTime time, Exclusion exclusion,
                       std::size_t workers) {
  grid.validate();
  EpidemicParams{alpha, omega, 0.0, 0.0}.validate();
  validate(design.covariates);
  validate(design.size);
  validate(design.baseline);
  if (exclusion == Exclusion::kExcludeIndexOnly) {
    throw ConfigError("estimate.exclusion", "exclude-index-only is not available in exact modes");
  }
  std::map<std::string, std::string> settings;
  settings["alpha"] = format_double(alpha);
  settings["omega"] = format_double(omega);
  settings["design.covariate"] = describe(design.covariates);
  settings["design.size"] = describe(design.size);
  settings["design.baseline"] = describe(design.baseline);
  settings["design.max_exact_n"] = std::to_string(design.max_cluster_size);
  settings["estimate.exclusion"] = to_string(exclusion);
  const double t = resolve_time(time, alpha, omega, design.size, settings);
  return run_exact_cells(grid, MapMode::kCtmc, std::move(settings), workers,
                         [&](double beta, double gamma) {
                           return expected_rr_exact(design, {alpha, omega, beta, gamma}, t,
                                                    exclusion);
                         });
}

MapResult run_mc_sweep(const GridSpec& grid, const StudyConfig& base,
                       const McSweepOptions& options) {
  grid.validate();
  base.validate();
  if (options.replicates < 2) throw ConfigError("study.replicates", "must be >= 2");
  if (!(options.z_threshold > 0.0)) throw ConfigError("estimate.z_threshold", "must be > 0");
  if (options.index_case) {
    if (!(options.index_case->burn_in > 0.0)) throw ConfigError("study.burn_in", "must be > 0");
    if (!(options.index_case->follow_up > 0.0)) {
      throw ConfigError("study.follow_up", "must be > 0");
    }
  }

  MapResult map;
  map.grid = grid;
  map.mode = MapMode::kMonteCarlo;
  map.master_seed = base.master_seed;
  auto& s = map.settings;
  s["mode"] = to_string(map.mode);
  s["alpha"] = format_double(base.params.alpha);
  s["omega"] = format_double(base.params.omega);
  s["seed"] = std::to_string(base.master_seed);
  s["design.covariate"] = describe(base.covariates);
  s["design.size"] = describe(base.size);
  s["design.baseline"] = describe(base.baseline);
  s["observation"] = (base.observation.kind == ObservationRule::Kind::kFixed ? "fixed(" : "exponential(") +
                     format_double(base.observation.value) + ")";
  s["study.clusters"] = std::to_string(base.clusters);
  s["study.replicates"] = std::to_string(options.replicates);
  s["estimate.exclusion"] = to_string(options.exclusion);
  s["estimate.aggregator"] = to_string(options.aggregator);
  s["estimate.z_threshold"] = format_double(options.z_threshold);
  s["estimate.continuity_correction"] = options.continuity_correction ? "true" : "false";
  if (options.index_case) {
    s["study.index_case"] = "true";
    s["study.burn_in"] = format_double(options.index_case->burn_in);
    s["study.follow_up"] = format_double(options.index_case->follow_up);
    s["study.max_batches"] = std::to_string(options.index_case->max_batches);
  }
  add_grid_settings(s, grid);
  map.fingerprint = config_fingerprint(s);

  const std::size_t ng = grid.gamma_count();
  const std::size_t cells = grid.cell_count();
  const std::size_t R = options.replicates;

  std::vector<RiskRatioEstimate> estimates(cells * R);
  std::vector<std::string> failures(cells * R);
  parallel_for(cells * R, resolve_workers(options.workers), [&](std::size_t unit) {
    const std::size_t cell = unit / R;
    const std::size_t rep = unit % R;
    const std::size_t ib = cell / ng, ig = cell % ng;
    StudyConfig cfg = base;
    cfg.params.beta = grid.beta_at(ib);
    cfg.params.gamma = grid.gamma_at(ig);
    const std::uint64_t key = derive_key(base.master_seed, {ib, ig, rep});
    try {
      if (options.index_case) {
        IndexCaseDesign design = *options.index_case;
        design.target_selected = base.clusters;
        estimates[unit] = risk_ratio(run_index_case_design(cfg, design, key), options.exclusion,
                                     options.continuity_correction);
      } else {
        estimates[unit] = risk_ratio(simulate_study(cfg, key), options.exclusion,
                                     options.continuity_correction);
      }
    } catch (...) {
      failures[unit] = failure_status(std::current_exception());
    }
  });

  map.cells.resize(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double beta = grid.beta_at(cell / ng);
    const double gamma = grid.gamma_at(cell % ng);
    const auto first = failures.begin() + static_cast<std::ptrdiff_t>(cell * R);
    const auto failed = std::find_if(first, first + static_cast<std::ptrdiff_t>(R),
                                     [](const std::string& f) { return !f.empty(); });
    if (failed != first + static_cast<std::ptrdiff_t>(R)) {
      map.cells[cell] = failed_cell(beta, gamma, *failed, R);
      continue;
    }
    const LogRRAggregate agg = aggregate_log_rr(
        std::span<const RiskRatioEstimate>(estimates).subspan(cell * R, R), options.aggregator);
    CellResult& c = map.cells[cell];
    c.beta = beta;
    c.gamma = gamma;
    c.mean_log_rr = agg.mean_log_rr;
    c.se = agg.se;
    c.replicates_used = agg.used;
    c.replicates_dropped = agg.dropped;
    c.classification = classify_direction(beta, agg.mean_log_rr, agg.se, options.z_threshold);
    if (agg.used == 0) {
      c.status = "all-undefined";
    } else if (std::isnan(agg.se)) {
      c.status = "too-few-defined";
    }
  }
  return map;
}

}  // namespace rrbias
