#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rrbias/cli.hpp"
#include "rrbias/config.hpp"
#include "rrbias/errors.hpp"
#include "rrbias/map_io.hpp"

using namespace rrbias;
namespace fs = std::filesystem;

namespace {

std::string config_error_field(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rrbias_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

GridSpec grid3() {
  GridSpec g;
  g.beta_min = g.gamma_min = -1.0;
  g.beta_max = g.gamma_max = 1.0;
  g.beta_step = g.gamma_step = 1.0;
  return g;
}

std::string panel(const std::string& svg, const std::string& cls) {
  const auto start = svg.find("<g class=\"" + cls + "\">");
  const auto end = svg.find("</g>", start);
  return svg.substr(start, end - start);
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config fills defaults") {
  const auto c = parse_config_text("mode = exact-pair\nalpha = 1e-4\nomega = 0.01\nt = 450\n");
  CHECK(c.mode == MapMode::kExactPair);
  CHECK(c.study.params.alpha == 1e-4);
  CHECK(c.study.observation.value == 450.0);
  CHECK(c.grid.beta_count() == 25);
  CHECK(c.mc.replicates == 200);
  CHECK(c.mc.aggregator == Aggregator::kMeanOfLogs);
  CHECK_FALSE(c.target_incidence.has_value());
}

TEST_CASE("full config") {
  const auto c = parse_config_text(R"(# Monte Carlo block design
mode = monte-carlo
alpha = 1e-4
omega = 0.01   # per pair
target_incidence = 0.15
seed = 17
design.covariate = cluster
design.p = 0.4
design.cluster_split = exact
design.size = shifted-poisson
design.size_mean = 2
study.clusters = 50
study.replicates = 10
estimate.aggregator = log-of-mean-risks
estimate.continuity_correction = true
grid.beta_min = -1
grid.beta_max = 1
grid.beta_step = 0.5
run.workers = 3
)");
  CHECK(c.mode == MapMode::kMonteCarlo);
  CHECK(*c.target_incidence == 0.15);
  CHECK(c.study.master_seed == 17);
  const auto* cl = std::get_if<ClusterRandomizedCovariates>(&c.study.covariates);
  REQUIRE(cl != nullptr);
  CHECK(cl->p == 0.4);
  CHECK(cl->split == ClusterSplit::kExactFraction);
  CHECK(std::get<ShiftedPoissonSize>(c.study.size).mean == 2.0);
  CHECK(c.study.clusters == 50);
  CHECK(c.mc.replicates == 10);
  CHECK(c.mc.aggregator == Aggregator::kLogOfMeanRisks);
  CHECK(c.mc.continuity_correction);
  CHECK(c.grid.beta_count() == 5);
  CHECK(c.mc.workers == 3);
}

TEST_CASE("errors name the offending field") {
  const std::string base = "alpha = 1e-4\nomega = 0.01\n";
  CHECK(config_error_field("alpha = -1\nomega = 0.01\n") == "alpha");
  CHECK(config_error_field(base + "omega_rate = 3\n") == "omega_rate");
  CHECK(config_error_field("omega = 0.01\n") == "alpha");
  CHECK(config_error_field(base + "alpha = 2e-4\n") == "alpha");
  CHECK(config_error_field(base + "t = abc\n") == "t");
  CHECK(config_error_field(base + "just words\n") == "line 3");
  CHECK(config_error_field(base + "t = 450\ntarget_incidence = 0.15\n") == "target_incidence");
  CHECK(config_error_field(base + "design.covariate = stripes\n") == "design.covariate");
  CHECK(config_error_field(base + "design.p = 1.5\ndesign.covariate = bernoulli\n") == "design.p");
  CHECK(config_error_field(base + "grid.beta_step = 0\n") == "grid.beta_step");
  CHECK(config_error_field(base + "study.clusters = 0\n") == "study.clusters");
  CHECK(config_error_field(base + "observation.rule = exponential\nobservation.mean = 400\n") ==
        "observation.rule");
  CHECK(config_error_field(base + "study.index_case = true\n") == "study.index_case");
  CHECK(config_error_field(base + "mode = monte-carlo\nestimate.exclusion = exclude-index-only\n") ==
        "estimate.exclusion");
  CHECK(config_error_field(base + "design.max_exact_n = 20\n") == "design.max_exact_n");
  CHECK(config_error_field(base + "mode = exact\n") == "mode");
  CHECK_THROWS_AS(parse_config_text(base + "mode = ctmc\n", MapMode::kExactPair), ConfigError);
  CHECK(parse_config_text(base, MapMode::kCtmc).mode == MapMode::kCtmc);
}

}  // TEST_SUITE

TEST_SUITE("map_io") {

TEST_CASE("CSV layout and round trip") {
  const auto map = run_exact_map(grid3(), 1e-4, 1e-2, ObservationTime::fixed(450.0), 1);
  const std::string csv = map_to_csv(map);
  CHECK(count(csv, "\n") == 10);
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);
  CHECK(csv.find("0,0,0,0,1,0,null-consistent,ok\n") != std::string::npos);

  const auto back = parse_map_csv(csv);
  CHECK(back.grid.beta_count() == 3);
  CHECK(back.grid.gamma_count() == 3);
  REQUIRE(back.cells.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(back.cells[i].mean_log_rr == map.cells[i].mean_log_rr);
    CHECK(back.cells[i].classification == map.cells[i].classification);
  }
  CHECK(map_to_csv(back) == csv);
}

TEST_CASE("NaN cells and statuses survive the round trip") {
  MapResult m;
  GridSpec g;
  g.beta_min = g.beta_max = 0.5;
  g.gamma_min = 0.0;
  g.gamma_max = 1.0;
  g.beta_step = g.gamma_step = 1.0;
  m.grid = g;
  m.cells.resize(2);
  m.cells[0] = {0.5, 0.0, 0.1, 0.02, 10, 0, Direction::kUnbiased, "ok"};
  m.cells[1] = {0.5, 1.0, NAN, NAN, 0, 10, Direction::kIndeterminate, "all-undefined"};
  const std::string csv = map_to_csv(m);
  CHECK(csv.find("0.5,1,nan,nan,0,10,indeterminate,all-undefined") != std::string::npos);
  const auto back = parse_map_csv(csv);
  CHECK(std::isnan(back.cells[1].mean_log_rr));
  CHECK(back.cells[1].status == "all-undefined");
  CHECK_THROWS_AS(parse_map_csv("not,a,header\n"), Error);
}

TEST_CASE("files are byte stable and the manifest reads back") {
  TempDir dir;
  const auto map = run_exact_map(grid3(), 1e-4, 1e-2, ObservationTime::fixed(450.0), 1);
  write_map_csv(map, dir.path / "a.csv");
  write_map_csv(run_exact_map(grid3(), 1e-4, 1e-2, ObservationTime::fixed(450.0), 3), dir.path / "b.csv");
  CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
  CHECK(read_map_csv(dir.path / "a.csv").cells.size() == 9);

  RunManifest m;
  m.fingerprint = map.fingerprint;
  m.master_seed = 99;
  m.mode = "exact-pair";
  m.started_utc = m.finished_utc = utc_timestamp();
  const auto mpath = manifest_path_for(dir.path / "a.csv");
  CHECK(mpath.filename() == "a.csv.manifest.json");
  write_manifest(map, m, mpath);
  const auto back = read_manifest(mpath);
  CHECK(back.fingerprint == map.fingerprint);
  CHECK(back.master_seed == 99);
  CHECK(back.mode == "exact-pair");
  const auto j = nlohmann::json::parse(slurp(mpath));
  CHECK(j.at("version") == kToolVersion);
  CHECK(j.at("settings").at("alpha") == "0.0001");
  CHECK(fingerprint_hex(0xabc) == "0x0000000000000abc");
}

TEST_CASE("SVG heatmap") {
  MapResult one;
  GridSpec g;
  g.beta_min = g.beta_max = g.gamma_min = g.gamma_max = 0.0;
  one.grid = g;
  one.cells = {CellResult{0.0, 0.0, 0.0, 0.0, 1, 0, Direction::kNullConsistent, "ok"}};
  one.fingerprint = 0x1234;
  const std::string svg = render_heatmap_svg(one);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(count(panel(svg, "logrr"), "<rect") == 1);
  CHECK(count(panel(svg, "direction"), "<rect") == 1);
  CHECK(svg.find("0x0000000000001234") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  // ω = 0 and γ = 0: β = 0 column is null; make a map that is null everywhere.
  auto null_map = run_exact_map(grid3(), 1e-4, 0.0, ObservationTime::fixed(450.0), 1);
  for (auto& c : null_map.cells) {
    c.mean_log_rr = 0.0;
    c.classification = Direction::kNullConsistent;
  }
  const std::string top = panel(render_heatmap_svg(null_map), "logrr");
  CHECK(count(top, "<rect") == 9);
  CHECK(count(top, "fill=\"#f7f7f7\"") == 9);

  auto clipped = null_map;
  clipped.cells[0].mean_log_rr = 5.0;
  clipped.cells[1].mean_log_rr = -5.0;
  clipped.cells[2].mean_log_rr = NAN;
  const std::string cs = render_heatmap_svg(clipped);
  CHECK(count(panel(cs, "logrr"), "class=\"over\"") == 1);
  CHECK(count(panel(cs, "logrr"), "class=\"under\"") == 1);
  CHECK(cs.find("#bdbdbd") != std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("map commands need a config") {
  for (const char* sub : {"sweep", "exact-map", "ctmc-map"}) {
    const auto r = cli({sub});
    CHECK(r.code == 2);
    CHECK(r.err.find("usage") != std::string::npos);
  }
  CHECK(cli({}).code != 0);
  CHECK(cli({"bogus"}).code != 0);
}

TEST_CASE("calibrate and tstar print results") {
  auto r = cli({"calibrate", "--alpha", "1e-4", "--omega", "1e-2", "--n", "4", "--target", "0.15"});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.rfind("T=", 0) == 0);
  const double T = std::stod(r.out.substr(2));
  CHECK(std::fabs(T - 450.0) <= 45.0);

  r = cli({"calibrate", "--alpha", "1e-4", "--omega", "1e-2", "--n", "4", "--target", "1.5"});
  CHECK(r.code == 1);
  CHECK(r.err.find("target_incidence") != std::string::npos);

  r = cli({"tstar", "--alpha", "1e-4", "--omega", "1e-2", "--beta", "-0.5", "--gamma", "-2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("eligible=true") != std::string::npos);
  const auto pos = r.out.find("t_star=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::isfinite(std::stod(r.out.substr(pos + 7))));

  r = cli({"tstar", "--alpha", "1e-4", "--omega", "1e-2", "--beta", "0", "--gamma", "-2"});
  CHECK(r.out == "eligible=false\n");
}

TEST_CASE("exact-map writes CSV, manifest and SVG; render rebuilds the SVG") {
  TempDir dir;
  const auto cfg = dir.path / "run.cfg";
  write_file(cfg, "alpha = 1e-4\nomega = 1e-2\nt = 450\ngrid.beta_step = 1\ngrid.gamma_step = 1\n");
  const auto csv = dir.path / "map.csv";
  auto r = cli({"--config", cfg.string(), "--out", csv.string(), "--format", "both", "exact-map"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(csv));
  CHECK(fs::exists(dir.path / "map.svg"));
  CHECK(fs::exists(dir.path / "map.csv.manifest.json"));
  const std::string first = slurp(csv);

  r = cli({"--config", cfg.string(), "--out", csv.string(), "--workers", "4", "exact-map"});
  REQUIRE(r.code == 0);
  CHECK(slurp(csv) == first);

  const auto rendered = dir.path / "again.svg";
  r = cli({"--out", rendered.string(), "render", csv.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(rendered) == slurp(dir.path / "map.svg"));

  r = cli({"--config", cfg.string(), "--out", csv.string(), "ctmc-map"});
  CHECK(r.code == 0);

  write_file(cfg, "alpha = 1e-4\nomega_rate = 1\n");
  r = cli({"--config", cfg.string(), "--out", csv.string(), "exact-map"});
  CHECK(r.code == 1);
  CHECK(r.err.find("omega_rate") != std::string::npos);
}

}  // TEST_SUITE
