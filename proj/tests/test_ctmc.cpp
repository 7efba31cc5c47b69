#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracle.hpp"
#include "rrbias/ctmc.hpp"
#include "rrbias/errors.hpp"
#include "rrbias/exact_pair.hpp"
#include "rrbias/simulator.hpp"

using namespace rrbias;

namespace {

const std::vector<std::uint8_t> kNone4(4, 0);

}  // namespace

TEST_SUITE("ctmc") {

TEST_CASE("single subject") {
  const std::vector<Covariate> x{0};
  const std::vector<std::uint8_t> y0{0};
  for (double t : {1.0, 450.0, 5000.0}) {
    const auto m = infection_marginals(x, y0, {1e-4, 1e-2, 0.3, 0.3}, t);
    CHECK(m[0] == doctest::Approx(-std::expm1(-1e-4 * t)).epsilon(1e-9));
  }
}

TEST_CASE("pair chain agrees with the closed form") {
  const std::vector<Covariate> x{1, 0};
  const std::vector<std::uint8_t> y0{0, 0};
  for (double b : {-3.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double g : {-3.0, -0.5, 0.0, 1.0, 3.0}) {
      const EpidemicParams p{1e-4, 1e-2, b, g};
      const auto m = infection_marginals(x, y0, p, 450.0);
      const auto ev = expected_infection_probs(p, 450.0);
      CHECK(std::fabs(m[0] - ev.p_treated) < 1e-8);
      CHECK(std::fabs(m[1] - ev.p_control) < 1e-8);
    }
  }
}

TEST_CASE("marginals match the dense exponential oracle") {
  const EpidemicParams p{1e-4, 1e-2, 1.0, 2.0};
  const std::vector<Covariate> x{1, 1, 0, 0};
  const auto m = infection_marginals(x, kNone4, p, 450.0);
  const auto ref = oracle::marginals({1, 1, 0, 0}, {0, 0, 0, 0}, p, 450.0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::fabs(m[j] - ref[j]) < 1e-9);
  // Frozen from the dense oracle.
  CHECK(m[0] == doctest::Approx(0.28075753715676427).epsilon(1e-9));
  CHECK(m[2] == doctest::Approx(0.2795681961445432).epsilon(1e-9));

  const std::vector<Covariate> x5{1, 0, 1, 0, 0};
  const std::vector<std::uint8_t> y5{0, 1, 0, 0, 0};
  const EpidemicParams q{3e-4, 2e-2, -0.7, 1.3};
  const auto m5 = infection_marginals(x5, y5, q, 120.0);
  const auto r5 = oracle::marginals({1, 0, 1, 0, 0}, {0, 1, 0, 0, 0}, q, 120.0);
  for (std::size_t j = 0; j < 5; ++j) CHECK(std::fabs(m5[j] - r5[j]) < 1e-9);
  CHECK(m5[1] == 1.0);
}

TEST_CASE("distribution is conserved and nonnegative") {
  const std::vector<Covariate> x{1, 0, 1, 0, 1, 0};
  const std::vector<std::uint8_t> y0(6, 0);
  const auto d = subset_distribution(x, y0, {1e-3, 5e-2, 0.4, -0.8}, 300.0);
  REQUIRE(d.size() == 64);
  CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : d) CHECK(v >= -1e-12);
}

TEST_CASE("t = 0 returns the baseline indicators") {
  const std::vector<Covariate> x{1, 0, 0};
  const std::vector<std::uint8_t> y0{0, 1, 0};
  const auto m = infection_marginals(x, y0, {1e-4, 1e-2, 0.0, 0.0}, 0.0);
  CHECK(m == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("exchangeable subjects share marginals and marginals grow in t") {
  const std::vector<Covariate> x{1, 0, 1, 0};
  const EpidemicParams p{1e-4, 1e-2, 0.6, -1.2};
  double prev1 = 0, prev0 = 0;
  for (double t : {50.0, 200.0, 450.0, 1500.0}) {
    const auto m = infection_marginals(x, kNone4, p, t);
    CHECK(m[0] == doctest::Approx(m[2]).epsilon(1e-10));
    CHECK(m[1] == doctest::Approx(m[3]).epsilon(1e-10));
    CHECK(m[0] >= prev1);
    CHECK(m[1] >= prev0);
    prev1 = m[0];
    prev0 = m[1];
  }
}

TEST_CASE("chain size cap") {
  const std::vector<Covariate> x(kMaxChainSize + 1, 0);
  const std::vector<std::uint8_t> y0(kMaxChainSize + 1, 0);
  CHECK_THROWS_AS(infection_marginals(x, y0, {1e-4, 1e-2, 0, 0}, 1.0), SizeLimitError);
}

TEST_CASE("null cumulative incidence") {
  for (std::size_t n : {1u, 3u, 7u}) {
    CHECK(null_cumulative_incidence(n, 1e-4, 0.0, 450.0) ==
          doctest::Approx(-std::expm1(-0.045)).epsilon(1e-12));
    CHECK(null_cumulative_incidence(n, 1e-4, 1e-2, 0.0) == 0.0);
  }
  const double i4 = null_cumulative_incidence(4, 1e-4, 1e-2, 450.0);
  CHECK(std::fabs(i4 - 0.15) < 0.01);
  CHECK(i4 == doctest::Approx(0.14921727068663471).epsilon(1e-9));

  // Count chain against the full subset chain.
  const auto full = infection_marginals(std::vector<Covariate>(4, 0), kNone4, {1e-4, 1e-2, 0, 0}, 450.0);
  CHECK(i4 == doctest::Approx(full[0]).epsilon(1e-9));

  const double mix = null_cumulative_incidence(ClusterSizeDist{ShiftedPoissonSize{0.0, 1}}, 1e-4, 1e-2, 450.0);
  CHECK(mix == doctest::Approx(-std::expm1(-0.045)).epsilon(1e-9));
}

TEST_CASE("expected risk ratio") {
  ExactDesign block;
  block.covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  block.size = FixedSize{4};
  CHECK(expected_rr_exact(block, {1e-4, 1e-2, 0.0, 0.0}, 450.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(expected_rr_exact(block, {1e-4, 1e-2, 1.0, 2.0}, 450.0) ==
        doctest::Approx(1.0042542071259284).epsilon(1e-9));

  ExactDesign cluster;
  cluster.covariates = ClusterRandomizedCovariates{0.5, ClusterSplit::kCoinFlip};
  cluster.size = FixedSize{4};
  CHECK(expected_rr_exact(cluster, {1e-4, 1e-2, 1.0, 2.0}, 450.0) ==
        doctest::Approx(2.582912702135959).epsilon(1e-9));

  ExactDesign pair;
  pair.covariates = BlockCovariates{BlockRule::kExactlyK, 1};
  pair.size = FixedSize{2};
  for (auto [b, g] : {std::pair{0.5, -0.5}, std::pair{-1.0, 2.0}, std::pair{2.0, 2.5}}) {
    const EpidemicParams p{1e-4, 1e-2, b, g};
    CHECK(std::fabs(expected_rr_exact(pair, p, 450.0) - exact_risk_ratio(p, 450.0)) < 1e-8);
  }

  ExactDesign bern;
  bern.covariates = BernoulliCovariates{0.5};
  bern.size = ShiftedPoissonSize{1.0, 1};
  bern.max_cluster_size = 12;
  for (auto [b, g] : {std::pair{0.0, 0.0}, std::pair{1.0, -2.0}}) {
    const EpidemicParams p{1e-4, 1e-2, b, g};
    const double rr = expected_rr_exact(bern, p, 450.0);
    if (b == 0.0) CHECK(rr == doctest::Approx(1.0).epsilon(1e-10));
    else CHECK(rr > 1.0);
  }
}

TEST_CASE("baseline exclusion and errors") {
  ExactDesign d;
  d.covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  d.size = FixedSize{4};
  d.baseline = ConditionalBaseline{0.1, 0.1};
  const EpidemicParams null{1e-4, 1e-2, 0.0, 0.0};
  CHECK(expected_rr_exact(d, null, 450.0, Exclusion::kExcludeBaselineInfected) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(expected_rr_exact(d, null, 450.0, Exclusion::kAllSubjects) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(expected_rr_exact(d, null, 450.0, Exclusion::kExcludeIndexOnly), NotApplicableError);

  ExactDesign big;
  big.size = FixedSize{11};
  CHECK_THROWS_AS(expected_rr_exact(big, null, 450.0), SizeLimitError);
  big.max_cluster_size = 12;
  big.covariates = BlockCovariates{BlockRule::kExactlyK, 11};
  CHECK_THROWS_AS(expected_rr_exact(big, null, 450.0), UndefinedError);
}

TEST_CASE("expected arm risks agree with simulation") {
  ExactDesign d;
  d.covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  d.size = FixedSize{4};
  const EpidemicParams p{1e-4, 1e-2, 1.0, 2.0};
  const auto exact = expected_arm_risks(d, p, 450.0);

  StudyConfig cfg;
  cfg.params = p;
  cfg.covariates = d.covariates;
  cfg.size = d.size;
  cfg.observation = ObservationRule::fixed(450.0);
  cfg.clusters = 20000;
  cfg.master_seed = 4242;
  const auto counts = pool_counts(simulate_study(cfg), Exclusion::kAllSubjects);
  const double r1 = counts.infected1 / counts.total1, r0 = counts.infected0 / counts.total0;
  // Within-cluster correlation inflates the variance; allow for a design effect of 2.
  CHECK(std::fabs(r1 - exact.risk1) < 3 * std::sqrt(2 * exact.risk1 * (1 - exact.risk1) / counts.total1));
  CHECK(std::fabs(r0 - exact.risk0) < 3 * std::sqrt(2 * exact.risk0 * (1 - exact.risk0) / counts.total0));
}

}  // TEST_SUITE
