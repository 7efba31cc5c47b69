#pragma once

// Map serialization: CSV (canonical result format), JSON run manifest and
// a two-panel SVG heatmap.
//
// CSV: header
//   beta,gamma,mean_log_rr,se,replicates_used,replicates_dropped,classification,status
// then one row per cell sorted by (beta, gamma), reals as "%.17g", "\n" line
// endings. Undefined reals are written as "nan".

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "rrbias/sweep.hpp"

namespace rrbias {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvHeader =
    "beta,gamma,mean_log_rr,se,replicates_used,replicates_dropped,classification,status";

std::string map_to_csv(const MapResult& map);
void write_map_csv(const MapResult& map, const std::filesystem::path& path);

/// Rebuilds cells and the grid from CSV. Fingerprint, seed and mode are not
/// part of the CSV and are left at their defaults (see read_manifest).
MapResult parse_map_csv(std::string_view text);
MapResult read_map_csv(const std::filesystem::path& path);

struct RunManifest {
  std::string version = kToolVersion;
  std::uint64_t fingerprint = 0;
  std::uint64_t master_seed = 0;
  std::string mode;
  std::string started_utc;
  std::string finished_utc;
};

/// "0x" followed by 16 lowercase hex digits.
std::string fingerprint_hex(std::uint64_t fingerprint);

/// Current UTC time as ISO 8601 with seconds.
std::string utc_timestamp();

std::string manifest_json(const MapResult& map, const RunManifest& manifest);
void write_manifest(const MapResult& map, const RunManifest& manifest,
                    const std::filesystem::path& path);
/// Reads fingerprint, seed and mode back from a manifest file.
RunManifest read_manifest(const std::filesystem::path& path);

/// `<csv path>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path);

std::string render_heatmap_svg(const MapResult& map);
void write_heatmap_svg(const MapResult& map, const std::filesystem::path& path);

}  // namespace rrbias
