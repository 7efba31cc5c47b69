#pragma once

// Pooled risk-ratio estimation, replicate aggregation and direction
// classification.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rrbias/simulator.hpp"

namespace rrbias {

enum class Exclusion {
  kAllSubjects,
  kExcludeBaselineInfected,  // drop every subject infected at baseline
  kExcludeIndexOnly,         // drop only the index case
};

const char* to_string(Exclusion e) noexcept;
/// Accepts "all-subjects", "exclude-baseline-infected", "exclude-index-only".
std::optional<Exclusion> parse_exclusion(std::string_view s) noexcept;

/// Pooled arm counts. Doubles so that expected counts and continuity
/// corrections fit the same type.
struct ArmCounts {
  double infected1 = 0.0;
  double total1 = 0.0;
  double infected0 = 0.0;
  double total0 = 0.0;
};

struct RiskRatioEstimate {
  std::optional<double> rr;      // empty when total1, total0 or infected0 is zero
  std::optional<double> log_rr;  // additionally empty when rr == 0
  ArmCounts counts;              // raw counts, before any correction
  Exclusion exclusion = Exclusion::kAllSubjects;
  bool corrected = false;  // continuity correction applied

  bool defined() const noexcept { return log_rr.has_value(); }
};

ArmCounts pool_counts(std::span<const ClusterOutcome> outcomes, Exclusion exclusion);

/// With continuity_correction, 0.5 is added to each of the four
/// infected/uninfected cells when any of them is zero.
RiskRatioEstimate risk_ratio(const ArmCounts& counts, Exclusion exclusion = Exclusion::kAllSubjects,
                             bool continuity_correction = false);
RiskRatioEstimate risk_ratio(std::span<const ClusterOutcome> outcomes, Exclusion exclusion,
                             bool continuity_correction = false);

enum class Aggregator {
  kMeanOfLogs,      // mean of per-replicate log RR
  kLogOfMeanRisks,  // log of the ratio of replicate-averaged arm risks
};

const char* to_string(Aggregator a) noexcept;
std::optional<Aggregator> parse_aggregator(std::string_view s) noexcept;

struct LogRRAggregate {
  double mean_log_rr = 0.0;  // NaN when no replicate is usable
  double se = 0.0;           // NaN when fewer than two replicates are usable
  std::size_t used = 0;
  std::size_t dropped = 0;
};

LogRRAggregate aggregate_log_rr(std::span<const RiskRatioEstimate> estimates,
                                Aggregator aggregator = Aggregator::kMeanOfLogs);

enum class Direction {
  kUnbiased,
  kBiased,
  kNullConsistent,
  kIndeterminate,
};

const char* to_string(Direction d) noexcept;
std::optional<Direction> parse_direction(std::string_view s) noexcept;

/// z = mean / se, with z = +-inf for se == 0 and mean != 0 and z = 0 for
/// se == 0 and mean == 0. NaN inputs give kIndeterminate.
Direction classify_direction(double beta, double mean_log_rr, double se,
                             double z_threshold = 2.0);

struct CellResult {
  double beta = 0.0;
  double gamma = 0.0;
  double mean_log_rr = 0.0;
  double se = 0.0;
  std::size_t replicates_used = 0;
  std::size_t replicates_dropped = 0;
  Direction classification = Direction::kIndeterminate;
  std::string status = "ok";
};

}  // namespace rrbias
