#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "rrbias/errors.hpp"
#include "rrbias/exact_pair.hpp"
#include "rrbias/map_io.hpp"
#include "rrbias/sweep.hpp"

using namespace rrbias;

namespace {

GridSpec small_grid(double lo, double hi, double step) {
  GridSpec g;
  g.beta_min = g.gamma_min = lo;
  g.beta_max = g.gamma_max = hi;
  g.beta_step = g.gamma_step = step;
  return g;
}

StudyConfig mc_base() {
  StudyConfig c;
  c.params = {1e-4, 1e-2, 0.0, 0.0};
  c.covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  c.size = FixedSize{4};
  c.observation = ObservationRule::fixed(450.0);
  c.clusters = 100;
  c.master_seed = 2024;
  return c;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("grid axes") {
  GridSpec g;
  CHECK(g.beta_count() == 25);
  CHECK(g.gamma_count() == 25);
  CHECK(g.beta_at(12) == 0.0);
  const auto s = small_grid(-1.0, 1.0, 0.1);
  CHECK(s.beta_count() == 21);
  const auto one = small_grid(0.5, 0.5, 1.0);
  CHECK(one.cell_count() == 1);
  GridSpec bad = g;
  bad.beta_step = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fingerprint and formatting") {
  CHECK(config_fingerprint({}) == 0xcbf29ce484222325ULL);
  const std::map<std::string, std::string> a{{"alpha", "0.0001"}, {"omega", "0.01"}};
  auto b = a;
  b["omega"] = "0.02";
  CHECK(config_fingerprint(a) != config_fingerprint(b));
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  setenv("RRBIAS_WORKERS", "5", 1);
  CHECK(resolve_workers(0) == 5);
  CHECK(resolve_workers(2) == 2);
  setenv("RRBIAS_WORKERS", "junk", 1);
  CHECK(resolve_workers(0) >= 1);
  unsetenv("RRBIAS_WORKERS");
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("exact map") {
  const auto map = run_exact_map(small_grid(-3.0, 3.0, 0.25), 1e-4, 1e-2, ObservationTime::fixed(450.0), 2);
  REQUIRE(map.cells.size() == 625);
  const auto& null = map.at(12, 12);
  CHECK(null.beta == 0.0);
  CHECK(null.gamma == 0.0);
  CHECK(null.mean_log_rr == 0.0);
  CHECK(null.classification == Direction::kNullConsistent);

  for (std::size_t ig = 0; ig < 25; ++ig) {
    const auto& c = map.at(12, ig);
    if (c.gamma == 0.0) continue;
    CHECK(c.classification == Direction::kBiased);
    CHECK((c.mean_log_rr > 0.0) == (c.gamma < 0.0));
  }
  for (const auto& c : map.cells) {
    CHECK(c.status == "ok");
    CHECK(c.mean_log_rr == doctest::Approx(std::log(exact_risk_ratio({1e-4, 1e-2, c.beta, c.gamma}, 450.0))));
  }
  CHECK(map.settings.at("mode") == "exact-pair");
}

TEST_CASE("exact map does not depend on worker count") {
  const auto g = small_grid(-2.0, 2.0, 0.5);
  const auto a = run_exact_map(g, 1e-4, 1e-2, ObservationTime::target(0.15), 1);
  const auto b = run_exact_map(g, 1e-4, 1e-2, ObservationTime::target(0.15), 4);
  CHECK(map_to_csv(a) == map_to_csv(b));
  CHECK(a.fingerprint == b.fingerprint);
  CHECK(a.settings.count("target_incidence") == 1);
}

TEST_CASE("two-person CTMC map equals the closed-form map") {
  const auto g = small_grid(-3.0, 3.0, 0.75);
  ExactDesign d;
  d.covariates = BlockCovariates{BlockRule::kExactlyK, 1};
  d.size = FixedSize{2};
  const auto exact = run_exact_map(g, 1e-4, 1e-2, ObservationTime::fixed(450.0), 0);
  const auto ctmc = run_ctmc_map(g, d, 1e-4, 1e-2, ObservationTime::fixed(450.0));
  REQUIRE(exact.cells.size() == ctmc.cells.size());
  for (std::size_t i = 0; i < exact.cells.size(); ++i) {
    CHECK(std::fabs(exact.cells[i].mean_log_rr - ctmc.cells[i].mean_log_rr) < 1e-7);
    CHECK(exact.cells[i].classification == ctmc.cells[i].classification);
  }
}

TEST_CASE("CTMC map rejects index-only exclusion and flags oversized cells") {
  ExactDesign d;
  CHECK_THROWS_AS(run_ctmc_map(small_grid(0, 0, 1), d, 1e-4, 1e-2, ObservationTime::fixed(450.0),
                               Exclusion::kExcludeIndexOnly),
                  ConfigError);
  d.size = ShiftedPoissonSize{3.0, 1};
  const auto map = run_ctmc_map(small_grid(0, 0, 1), d, 1e-4, 1e-2, ObservationTime::fixed(450.0));
  CHECK(map.cells[0].status == "size-limit");
  CHECK(std::isnan(map.cells[0].mean_log_rr));
}

TEST_CASE("Monte Carlo sweep is reproducible and worker independent") {
  const auto g = small_grid(-1.0, 1.0, 1.0);
  McSweepOptions o;
  o.replicates = 20;
  o.workers = 1;
  const auto a = run_mc_sweep(g, mc_base(), o);
  o.workers = 4;
  const auto b = run_mc_sweep(g, mc_base(), o);
  CHECK(map_to_csv(a) == map_to_csv(b));

  auto other = mc_base();
  other.master_seed = 2025;
  CHECK(map_to_csv(run_mc_sweep(g, other, o)) != map_to_csv(a));

  for (const auto& c : a.cells) {
    CHECK(c.replicates_used + c.replicates_dropped == 20);
    if (c.status == "ok") CHECK(c.se > 0.0);
  }
}

TEST_CASE("Monte Carlo null cell") {
  McSweepOptions o;
  o.replicates = 40;
  auto base = mc_base();
  base.clusters = 500;
  const auto map = run_mc_sweep(small_grid(0, 0, 1), base, o);
  CHECK(map.cells[0].classification == Direction::kNullConsistent);
}

TEST_CASE("Monte Carlo cells with failing replicates") {
  McSweepOptions o;
  o.replicates = 5;
  auto base = mc_base();
  base.params.alpha = 0.0;  // no one is ever infected
  auto map = run_mc_sweep(small_grid(0, 0, 1), base, o);
  CHECK(map.cells[0].status == "all-undefined");
  CHECK(map.cells[0].replicates_dropped == 5);

  IndexCaseDesign idx;
  idx.target_selected = 10;
  idx.max_batches = 2;
  o.index_case = idx;
  map = run_mc_sweep(small_grid(0, 0, 1), base, o);
  CHECK(map.cells[0].status == "progress-failure");
  CHECK(map.cells[0].replicates_used == 0);
}

TEST_CASE("Monte Carlo option validation") {
  McSweepOptions o;
  o.replicates = 1;
  CHECK_THROWS_AS(run_mc_sweep(small_grid(0, 0, 1), mc_base(), o), ConfigError);
}

}  // TEST_SUITE
