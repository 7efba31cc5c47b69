#pragma once

// Flat "key = value" run configuration. Lines may carry "#" comments; keys
// use dotted section prefixes (design.*, observation.*, study.*,
// estimate.*, grid.*, run.*). Unknown and duplicate keys are rejected.
// The full key list is in README.md.

#include <filesystem>
#include <optional>
#include <string_view>

#include "rrbias/ctmc.hpp"
#include "rrbias/sweep.hpp"

namespace rrbias {

struct RunConfig {
  MapMode mode = MapMode::kExactPair;
  StudyConfig study;  // params (beta, gamma ignored), design, observation, clusters, seed
  std::optional<double> target_incidence;  // calibrate T instead of using study.observation
  GridSpec grid;
  McSweepOptions mc;
  std::size_t max_exact_n = kDefaultMaxEnumeratedSize;

  ExactDesign exact_design() const;
  /// The fixed observation time, or the calibration target.
  ObservationTime observation_time() const;
};

/// With `required_mode`, a missing `mode` key defaults to it and a
/// different explicit mode is an error.
RunConfig parse_config(const std::filesystem::path& path,
                       std::optional<MapMode> required_mode = std::nullopt);
RunConfig parse_config_text(std::string_view text,
                            std::optional<MapMode> required_mode = std::nullopt);

/// Runs the map the config describes. For Monte Carlo runs with a
/// calibration target, T is calibrated over the configured size distribution
/// first and the target joins the fingerprint.
MapResult run_configured_map(const RunConfig& config);

}  // namespace rrbias
