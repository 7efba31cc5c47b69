#include "rrbias/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rrbias {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool eligible(const ClusterOutcome& c, std::size_t j, Exclusion exclusion) {
  switch (exclusion) {
    case Exclusion::kAllSubjects: return true;
    case Exclusion::kExcludeBaselineInfected: return j >= c.y0.size() || c.y0[j] == 0;
    case Exclusion::kExcludeIndexOnly: return !c.index || *c.index != j;
  }
  return true;
}

}  // namespace

const char* to_string(Exclusion e) noexcept {
  switch (e) {
    case Exclusion::kAllSubjects: return "all-subjects";
    case Exclusion::kExcludeBaselineInfected: return "exclude-baseline-infected";
    case Exclusion::kExcludeIndexOnly: return "exclude-index-only";
  }
  return "?";
}

std::optional<Exclusion> parse_exclusion(std::string_view s) noexcept {
  for (Exclusion e : {Exclusion::kAllSubjects, Exclusion::kExcludeBaselineInfected,
                      Exclusion::kExcludeIndexOnly}) {
    if (s == to_string(e)) return e;
  }
  return std::nullopt;
}

ArmCounts pool_counts(std::span<const ClusterOutcome> outcomes, Exclusion exclusion) {
  ArmCounts c;
  for (const ClusterOutcome& o : outcomes) {
    for (std::size_t j = 0; j < o.size(); ++j) {
      if (!eligible(o, j, exclusion)) continue;
      const double infected = o.yT[j] ? 1.0 : 0.0;
      if (o.x[j]) {
        c.total1 += 1.0;
        c.infected1 += infected;
      } else {
        c.total0 += 1.0;
        c.infected0 += infected;
      }
    }
  }
  return c;
}

RiskRatioEstimate risk_ratio(const ArmCounts& counts, Exclusion exclusion,
                             bool continuity_correction) {
  RiskRatioEstimate est;
  est.counts = counts;
  est.exclusion = exclusion;
  if (!(counts.total1 > 0.0) || !(counts.total0 > 0.0)) return est;

  double i1 = counts.infected1, n1 = counts.total1;
  double i0 = counts.infected0, n0 = counts.total0;
  if (continuity_correction &&
      (i1 == 0.0 || i0 == 0.0 || i1 == n1 || i0 == n0)) {
    i1 += 0.5;
    i0 += 0.5;
    n1 += 1.0;
    n0 += 1.0;
    est.corrected = true;
  }
  if (!(i0 > 0.0)) return est;

  const double rr = (i1 / n1) / (i0 / n0);
  est.rr = rr;
  if (rr > 0.0) est.log_rr = std::log(rr);
  return est;
}

RiskRatioEstimate risk_ratio(std::span<const ClusterOutcome> outcomes, Exclusion exclusion,
                             bool continuity_correction) {
  return risk_ratio(pool_counts(outcomes, exclusion), exclusion, continuity_correction);
}

const char* to_string(Aggregator a) noexcept {
  switch (a) {
    case Aggregator::kMeanOfLogs: return "mean-of-logs";
    case Aggregator::kLogOfMeanRisks: return "log-of-mean-risks";
  }
  return "?";
}

std::optional<Aggregator> parse_aggregator(std::string_view s) noexcept {
  if (s == "mean-of-logs") return Aggregator::kMeanOfLogs;
  if (s == "log-of-mean-risks") return Aggregator::kLogOfMeanRisks;
  return std::nullopt;
}

LogRRAggregate aggregate_log_rr(std::span<const RiskRatioEstimate> estimates,
                                Aggregator aggregator) {
  LogRRAggregate out;
  if (aggregator == Aggregator::kMeanOfLogs) {
    double sum = 0.0;
    for (const auto& e : estimates) {
      if (e.defined()) {
        sum += *e.log_rr;
        ++out.used;
      }
    }
    out.dropped = estimates.size() - out.used;
    if (out.used == 0) {
      out.mean_log_rr = kNaN;
      out.se = kNaN;
      return out;
    }
    const double m = static_cast<double>(out.used);
    out.mean_log_rr = sum / m;
    if (out.used < 2) {
      out.se = kNaN;
      return out;
    }
    double ss = 0.0;
    for (const auto& e : estimates) {
      if (e.defined()) ss += (*e.log_rr - out.mean_log_rr) * (*e.log_rr - out.mean_log_rr);
    }
    out.se = std::sqrt(ss / (m - 1.0) / m);
    return out;
  }

  // Log of the ratio of mean risks; SE by the delta method.
  double s1 = 0.0, s0 = 0.0;
  for (const auto& e : estimates) {
    const ArmCounts& c = e.counts;
    if (c.total1 > 0.0 && c.total0 > 0.0) {
      s1 += c.infected1 / c.total1;
      s0 += c.infected0 / c.total0;
      ++out.used;
    }
  }
  out.dropped = estimates.size() - out.used;
  const double m = static_cast<double>(out.used);
  if (out.used == 0 || !(s1 > 0.0) || !(s0 > 0.0)) {
    out.mean_log_rr = kNaN;
    out.se = kNaN;
    return out;
  }
  const double r1 = s1 / m, r0 = s0 / m;
  out.mean_log_rr = std::log(r1 / r0);
  if (out.used < 2) {
    out.se = kNaN;
    return out;
  }
  double v11 = 0.0, v00 = 0.0, v10 = 0.0;
  for (const auto& e : estimates) {
    const ArmCounts& c = e.counts;
    if (!(c.total1 > 0.0 && c.total0 > 0.0)) continue;
    const double d1 = c.infected1 / c.total1 - r1;
    const double d0 = c.infected0 / c.total0 - r0;
    v11 += d1 * d1;
    v00 += d0 * d0;
    v10 += d1 * d0;
  }
  v11 /= m - 1.0;
  v00 /= m - 1.0;
  v10 /= m - 1.0;
  const double var = (v11 / (r1 * r1) + v00 / (r0 * r0) - 2.0 * v10 / (r1 * r0)) / m;
  out.se = std::sqrt(std::max(var, 0.0));
  return out;
}

const char* to_string(Direction d) noexcept {
  switch (d) {
    case Direction::kUnbiased: return "direction-unbiased";
    case Direction::kBiased: return "direction-biased";
    case Direction::kNullConsistent: return "null-consistent";
    case Direction::kIndeterminate: return "indeterminate";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view s) noexcept {
  for (Direction d : {Direction::kUnbiased, Direction::kBiased, Direction::kNullConsistent,
                      Direction::kIndeterminate}) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

Direction classify_direction(double beta, double mean_log_rr, double se, double z_threshold) {
  if (std::isnan(mean_log_rr) || std::isnan(se) || std::isnan(beta)) {
    return Direction::kIndeterminate;
  }
  double z;
  if (se == 0.0) {
    z = mean_log_rr == 0.0 ? 0.0
                           : std::copysign(std::numeric_limits<double>::infinity(), mean_log_rr);
  } else {
    z = mean_log_rr / se;
  }
  const bool significant = std::fabs(z) >= z_threshold;
  if (beta == 0.0) return significant ? Direction::kBiased : Direction::kNullConsistent;
  if (!significant) return Direction::kIndeterminate;
  return (mean_log_rr > 0.0) == (beta > 0.0) ? Direction::kUnbiased : Direction::kBiased;
}

}  // namespace rrbias
