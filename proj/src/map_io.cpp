#include "rrbias/map_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rrbias/errors.hpp"

namespace rrbias {
namespace {

std::string csv_real(double v) { return std::isnan(v) ? "nan" : format_double(v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = line.find(sep);
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    line.remove_prefix(pos + 1);
  }
}

double parse_real(std::string_view s, std::size_t line) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("csv line " + std::to_string(line) + ": bad count '" + std::string(s) + "'");
  }
  return v;
}

void axis_from_values(std::vector<double> values, double& lo, double& hi, double& step) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  lo = values.front();
  hi = values.back();
  step = values.size() > 1 ? (hi - lo) / static_cast<double>(values.size() - 1) : 1.0;
}

}  // namespace

std::string map_to_csv(const MapResult& map) {
  std::vector<const CellResult*> rows;
  rows.reserve(map.cells.size());
  for (const auto& c : map.cells) rows.push_back(&c);
  std::stable_sort(rows.begin(), rows.end(), [](const CellResult* a, const CellResult* b) {
    return a->beta != b->beta ? a->beta < b->beta : a->gamma < b->gamma;
  });

  std::string out = kCsvHeader;
  out += '\n';
  for (const CellResult* c : rows) {
    std::string status = c->status;
    std::replace(status.begin(), status.end(), ',', ';');
    out += csv_real(c->beta) + ',' + csv_real(c->gamma) + ',' + csv_real(c->mean_log_rr) + ',' +
           csv_real(c->se) + ',' + std::to_string(c->replicates_used) + ',' +
           std::to_string(c->replicates_dropped) + ',' + to_string(c->classification) + ',' +
           status + '\n';
  }
  return out;
}

void write_map_csv(const MapResult& map, const std::filesystem::path& path) {
  write_text(path, map_to_csv(map));
}

MapResult parse_map_csv(std::string_view text) {
  MapResult map;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> betas, gammas;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw Error("csv: unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw Error("csv line " + std::to_string(line_no) + ": expected 8 fields, got " +
                  std::to_string(f.size()));
    }
    CellResult c;
    c.beta = parse_real(f[0], line_no);
    c.gamma = parse_real(f[1], line_no);
    c.mean_log_rr = parse_real(f[2], line_no);
    c.se = parse_real(f[3], line_no);
    c.replicates_used = parse_count(f[4], line_no);
    c.replicates_dropped = parse_count(f[5], line_no);
    const auto d = parse_direction(f[6]);
    if (!d) {
      throw Error("csv line " + std::to_string(line_no) + ": unknown classification '" +
                  std::string(f[6]) + "'");
    }
    c.classification = *d;
    c.status = std::string(f[7]);
    betas.push_back(c.beta);
    gammas.push_back(c.gamma);
    map.cells.push_back(std::move(c));
  }
  if (!header_seen) throw Error("csv: missing header");
  if (map.cells.empty()) throw Error("csv: no rows");

  GridSpec& g = map.grid;
  axis_from_values(betas, g.beta_min, g.beta_max, g.beta_step);
  axis_from_values(gammas, g.gamma_min, g.gamma_max, g.gamma_step);
  std::sort(betas.begin(), betas.end());
  std::sort(gammas.begin(), gammas.end());
  const auto nb = static_cast<std::size_t>(std::unique(betas.begin(), betas.end()) - betas.begin());
  const auto ng =
      static_cast<std::size_t>(std::unique(gammas.begin(), gammas.end()) - gammas.begin());
  if (nb * ng != map.cells.size()) {
    throw Error("csv: rows do not form a complete (beta, gamma) grid");
  }
  // Grid reconstruction must reproduce the row count, or at() is wrong.
  if (g.beta_count() != nb || g.gamma_count() != ng) {
    throw Error("csv: beta/gamma values are not evenly spaced");
  }
  std::stable_sort(map.cells.begin(), map.cells.end(), [](const CellResult& a, const CellResult& b) {
    return a.beta != b.beta ? a.beta < b.beta : a.gamma < b.gamma;
  });
  return map;
}

MapResult read_map_csv(const std::filesystem::path& path) { return parse_map_csv(read_text(path)); }

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_json(const MapResult& map, const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["tool"] = "rrbias";
  j["version"] = manifest.version;
  j["fingerprint"] = fingerprint_hex(manifest.fingerprint);
  j["master_seed"] = manifest.master_seed;
  j["mode"] = manifest.mode;
  j["started_utc"] = manifest.started_utc;
  j["finished_utc"] = manifest.finished_utc;
  j["cells"] = map.cells.size();
  j["settings"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : map.settings) j["settings"][key] = value;
  return j.dump(2) + "\n";
}

void write_manifest(const MapResult& map, const RunManifest& manifest,
                    const std::filesystem::path& path) {
  write_text(path, manifest_json(map, manifest));
}

RunManifest read_manifest(const std::filesystem::path& path) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    m.version = j.at("version").get<std::string>();
    m.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.mode = j.at("mode").get<std::string>();
    m.started_utc = j.value("started_utc", "");
    m.finished_utc = j.value("finished_utc", "");
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".manifest.json");
}

}  // namespace rrbias
