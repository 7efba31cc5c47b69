#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rrbias/estimators.hpp"

using namespace rrbias;

namespace {

RiskRatioEstimate from_rr(double rr) {
  return risk_ratio(ArmCounts{rr * 10.0, 100.0, 10.0, 100.0});
}

RiskRatioEstimate undefined_estimate() { return risk_ratio(ArmCounts{5.0, 100.0, 0.0, 100.0}); }

ClusterOutcome cluster(std::vector<Covariate> x, std::vector<std::uint8_t> y0,
                       std::vector<std::uint8_t> yT, std::optional<std::size_t> index = {}) {
  ClusterOutcome o;
  o.x = std::move(x);
  o.y0 = std::move(y0);
  o.yT = std::move(yT);
  o.index = index;
  o.T = 1.0;
  return o;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("risk ratio arithmetic") {
  const auto e = risk_ratio(ArmCounts{30, 100, 15, 100});
  REQUIRE(e.defined());
  CHECK(*e.rr == doctest::Approx(2.0));
  CHECK(*e.log_rr == doctest::Approx(std::log(2.0)));

  const auto u = undefined_estimate();
  CHECK_FALSE(u.rr.has_value());
  CHECK_FALSE(u.defined());
  CHECK_FALSE(risk_ratio(ArmCounts{0, 0, 3, 10}).defined());

  const auto z = risk_ratio(ArmCounts{0, 50, 3, 50});
  REQUIRE(z.rr.has_value());
  CHECK(*z.rr == 0.0);
  CHECK_FALSE(z.log_rr.has_value());
}

TEST_CASE("continuity correction") {
  const auto c = risk_ratio(ArmCounts{5, 100, 0, 100}, Exclusion::kAllSubjects, true);
  REQUIRE(c.defined());
  CHECK(c.corrected);
  CHECK(*c.rr == doctest::Approx(5.5 / 101.0 / (0.5 / 101.0)));
  CHECK(c.counts.infected0 == 0.0);
  const auto n = risk_ratio(ArmCounts{30, 100, 15, 100}, Exclusion::kAllSubjects, true);
  CHECK_FALSE(n.corrected);
}

TEST_CASE("pooling and exclusions") {
  const std::vector<ClusterOutcome> out{
      cluster({1, 0, 1, 0}, {1, 1, 1, 1}, {1, 1, 1, 1}),
      cluster({1, 0, 1, 0}, {0, 0, 0, 0}, {1, 0, 0, 1}),
      cluster({1, 1, 0}, {1, 0, 0}, {1, 1, 0}, std::size_t{0}),
  };
  const auto all = pool_counts(out, Exclusion::kAllSubjects);
  CHECK(all.total1 == 6);
  CHECK(all.infected1 == 5);
  CHECK(all.total0 == 5);
  CHECK(all.infected0 == 3);

  const auto ex = pool_counts(out, Exclusion::kExcludeBaselineInfected);
  CHECK(ex.total1 == 3);  // the first cluster contributes nobody
  CHECK(ex.infected1 == 2);
  CHECK(ex.total0 == 3);
  CHECK(ex.infected0 == 1);

  const auto idx = pool_counts(out, Exclusion::kExcludeIndexOnly);
  CHECK(idx.total1 == 5);
  CHECK(idx.total0 == 5);

  const auto rr = risk_ratio(out, Exclusion::kExcludeBaselineInfected);
  CHECK(rr.exclusion == Exclusion::kExcludeBaselineInfected);
  CHECK(*rr.rr == doctest::Approx((2.0 / 3.0) / (1.0 / 3.0)));
}

TEST_CASE("aggregation") {
  std::vector<RiskRatioEstimate> ones{from_rr(1), from_rr(1), from_rr(1)};
  auto a = aggregate_log_rr(ones);
  CHECK(a.mean_log_rr == doctest::Approx(0.0));
  CHECK(a.se == doctest::Approx(0.0));
  CHECK(a.used == 3);

  std::vector<RiskRatioEstimate> cancel{from_rr(2), from_rr(0.5)};
  CHECK(aggregate_log_rr(cancel).mean_log_rr == doctest::Approx(0.0));

  std::vector<RiskRatioEstimate> mixed{from_rr(2), undefined_estimate()};
  a = aggregate_log_rr(mixed);
  CHECK(a.mean_log_rr == doctest::Approx(std::log(2.0)));
  CHECK(a.used == 1);
  CHECK(a.dropped == 1);
  CHECK(std::isnan(a.se));

  std::vector<RiskRatioEstimate> none{undefined_estimate(), undefined_estimate()};
  a = aggregate_log_rr(none);
  CHECK(std::isnan(a.mean_log_rr));
  CHECK(a.used == 0);
  CHECK(a.dropped == 2);

  // Standard error of the mean of logs.
  std::vector<RiskRatioEstimate> spread{from_rr(1), from_rr(std::exp(1.0)), from_rr(std::exp(2.0))};
  a = aggregate_log_rr(spread);
  CHECK(a.mean_log_rr == doctest::Approx(1.0));
  CHECK(a.se == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("log of mean risks") {
  std::vector<RiskRatioEstimate> e{risk_ratio(ArmCounts{20, 100, 10, 100}),
                                   risk_ratio(ArmCounts{40, 100, 10, 100})};
  const auto a = aggregate_log_rr(e, Aggregator::kLogOfMeanRisks);
  CHECK(a.mean_log_rr == doctest::Approx(std::log(0.3 / 0.1)));
  CHECK(a.se > 0.0);
  CHECK(a.used == 2);
}

TEST_CASE("direction classification") {
  CHECK(classify_direction(1.0, -0.4, 0.05) == Direction::kBiased);
  CHECK(classify_direction(-1.0, -0.2, 0.05) == Direction::kUnbiased);
  CHECK(classify_direction(0.5, 0.01, 0.05) == Direction::kIndeterminate);
  CHECK(classify_direction(0.0, 0.01, 0.05) == Direction::kNullConsistent);
  CHECK(classify_direction(0.0, 0.5, 0.05) == Direction::kBiased);
  CHECK(classify_direction(0.0, 0.0, 0.0) == Direction::kNullConsistent);
  CHECK(classify_direction(-2.0, 1e-6, 0.0) == Direction::kBiased);
  CHECK(classify_direction(-2.0, -1e-6, 0.0) == Direction::kUnbiased);
  CHECK(classify_direction(1.0, 0.0, 0.0) == Direction::kIndeterminate);
  CHECK(classify_direction(1.0, std::nan(""), 0.1) == Direction::kIndeterminate);
  CHECK(classify_direction(1.0, 0.3, std::nan("")) == Direction::kIndeterminate);
}

TEST_CASE("string round trips") {
  for (auto e : {Exclusion::kAllSubjects, Exclusion::kExcludeBaselineInfected, Exclusion::kExcludeIndexOnly})
    CHECK(parse_exclusion(to_string(e)) == e);
  for (auto a : {Aggregator::kMeanOfLogs, Aggregator::kLogOfMeanRisks})
    CHECK(parse_aggregator(to_string(a)) == a);
  for (auto d : {Direction::kUnbiased, Direction::kBiased, Direction::kNullConsistent, Direction::kIndeterminate})
    CHECK(parse_direction(to_string(d)) == d);
  CHECK_FALSE(parse_exclusion("none").has_value());
  CHECK(std::string(to_string(Direction::kBiased)) == "direction-biased");
}

}  // TEST_SUITE
