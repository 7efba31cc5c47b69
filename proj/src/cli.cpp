#include "rrbias/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rrbias/calibration.hpp"
#include "rrbias/config.hpp"
#include "rrbias/errors.hpp"
#include "rrbias/exact_pair.hpp"
#include "rrbias/map_io.hpp"

namespace rrbias {
namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::size_t workers = 0;
  std::string format = "csv";
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

fs::path svg_path_for(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".svg");
  return p;
}

int run_map(MapMode mode, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  RunConfig cfg = parse_config(g.config, mode);
  if (g.seed_given) cfg.study.master_seed = g.seed;
  if (g.workers > 0) cfg.mc.workers = g.workers;

  RunManifest manifest;
  manifest.started_utc = utc_timestamp();
  const MapResult map = run_configured_map(cfg);
  manifest.finished_utc = utc_timestamp();
  manifest.fingerprint = map.fingerprint;
  manifest.master_seed = map.master_seed;
  manifest.mode = to_string(map.mode);

  const fs::path csv = g.out.empty() ? fs::path(std::string(to_string(mode)) + ".csv") : fs::path(g.out);
  if (g.format == "csv" || g.format == "both") {
    write_map_csv(map, csv);
    out << "wrote " << csv.string() << '\n';
  }
  write_manifest(map, manifest, manifest_path_for(csv));
  if (g.format == "svg" || g.format == "both") {
    const fs::path svg = svg_path_for(csv);
    write_heatmap_svg(map, svg);
    out << "wrote " << svg.string() << '\n';
  }

  std::size_t biased = 0, failed = 0;
  for (const CellResult& c : map.cells) {
    if (c.classification == Direction::kBiased) ++biased;
    if (c.status != "ok") ++failed;
  }
  out << map.cells.size() << " cells, " << biased << " direction-biased, fingerprint "
      << fingerprint_hex(map.fingerprint) << '\n';
  if (failed > 0) err << "warning: " << failed << " cells have a non-ok status (see the status column)\n";
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-ratio direction bias under within-cluster contagion", "rrbias"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration file (key = value)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed, overrides the config");
  app.add_option("--out", g.out, "Output CSV path (SVG and manifest are written next to it)");
  app.add_option("--workers", g.workers,
                 "Worker threads (default: RRBIAS_WORKERS, else hardware concurrency)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "svg", "both"}));

  auto* exact = app.add_subcommand("exact-map", "Closed-form map for two-person clusters");
  auto* ctmc = app.add_subcommand("ctmc-map", "Exact map for general small clusters");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo map");

  auto* calibrate = app.add_subcommand("calibrate", "Observation time for a null incidence target");
  double c_alpha = 0, c_omega = 0, c_target = 0, c_mean = 0;
  std::size_t c_n = 0, c_shift = 1;
  calibrate->add_option("--alpha", c_alpha)->required();
  calibrate->add_option("--omega", c_omega)->required();
  calibrate->add_option("--target", c_target)->required();
  auto* n_opt = calibrate->add_option("--n", c_n, "Fixed cluster size");
  auto* mean_opt = calibrate->add_option("--size-mean", c_mean, "Shifted-Poisson size mean");
  auto* shift_opt = calibrate->add_option("--size-shift", c_shift, "Shifted-Poisson shift")
                        ->capture_default_str();
  n_opt->excludes(mean_opt);
  shift_opt->needs(mean_opt);

  auto* tstar = app.add_subcommand("tstar", "Direction-bias eligibility and t* for a pair");
  double t_alpha = 0, t_omega = 0, t_beta = 0, t_gamma = 0;
  tstar->add_option("--alpha", t_alpha)->required();
  tstar->add_option("--omega", t_omega)->required();
  tstar->add_option("--beta", t_beta)->required();
  tstar->add_option("--gamma", t_gamma)->required();

  auto* render = app.add_subcommand("render", "Render a map CSV as SVG");
  std::string render_in;
  render->add_option("input", render_in, "Map CSV")->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("rrbias");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    for (auto [sub, mode] : {std::pair{exact, MapMode::kExactPair}, std::pair{ctmc, MapMode::kCtmc},
                             std::pair{sweep, MapMode::kMonteCarlo}}) {
      if (!sub->parsed()) continue;
      if (g.config.empty()) {
        err << "error: " << sub->get_name() << " requires --config\n"
            << "usage: rrbias " << sub->get_name()
            << " --config FILE [--seed N] [--out PATH] [--workers N] [--format csv|svg|both]\n";
        return 2;
      }
      return run_map(mode, g, out, err);
    }

    if (calibrate->parsed()) {
      ClusterSizeDist size = FixedSize{4};
      if (mean_opt->count() > 0) {
        size = ShiftedPoissonSize{c_mean, c_shift};
      } else if (n_opt->count() > 0) {
        size = FixedSize{c_n};
      } else {
        err << "error: calibrate needs --n or --size-mean\n";
        return 2;
      }
      const double T = calibrate_T(c_target, c_alpha, c_omega, size);
      out << "T=" << fmt(T) << '\n';
      return 0;
    }

    if (tstar->parsed()) {
      const EpidemicParams params{t_alpha, t_omega, t_beta, t_gamma};
      params.validate();
      const auto r = tstar_bound(params);
      out << "eligible=" << (r ? "true" : "false") << '\n';
      if (r) {
        out << "t_star=" << fmt(r->t_star) << '\n'
            << "analytic_bound=" << fmt(r->analytic_bound) << '\n'
            << "sub_case=" << r->sub_case << '\n';
      }
      return 0;
    }

    if (render->parsed()) {
      MapResult map = read_map_csv(render_in);
      const fs::path manifest = manifest_path_for(render_in);
      if (fs::exists(manifest)) {
        const RunManifest m = read_manifest(manifest);
        map.fingerprint = m.fingerprint;
        map.master_seed = m.master_seed;
        if (auto mode = parse_map_mode(m.mode)) map.mode = *mode;
      }
      const fs::path svg = g.out.empty() ? svg_path_for(render_in) : fs::path(g.out);
      write_heatmap_svg(map, svg);
      out << "wrote " << svg.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace rrbias
