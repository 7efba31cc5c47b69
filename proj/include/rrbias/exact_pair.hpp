#pragma once

// Closed-form results for a two-person cluster with x = (1, 0), both
// subjects uninfected at time zero.

#include <optional>

#include "rrbias/hazard.hpp"

namespace rrbias {

/// Which closed form was used for each subject. A subject's formula has a
/// removable singularity when its two competing exponential rates coincide.
enum class PairBranch {
  kGeneric,            // e^b w != a and a e^b != w e^g
  kTreatedDegenerate,  // e^b w == a
  kControlDegenerate,  // a e^b == w e^g
  kBothDegenerate,
};

const char* to_string(PairBranch branch) noexcept;

struct PairEvaluation {
  double p_treated = 0.0;  // E[Y_1(t)], subject with x = 1
  double p_control = 0.0;  // E[Y_2(t)], subject with x = 0
  // Survival complements 1 - p, kept separately for accuracy when p -> 1.
  double s_treated = 1.0;
  double s_control = 1.0;
  std::optional<double> rr;  // empty when p_control == 0
  PairBranch branch = PairBranch::kGeneric;
};

struct FirstInfectionLaw {
  double rate = 0.0;                // total rate of the first infection
  double p_first_is_treated = 0.0;  // Pr(first infected has x = 1)
};

/// Relative tolerance for treating two rates as equal.
inline constexpr double kBranchTolerance = 1e-9;

PairEvaluation expected_infection_probs(const EpidemicParams& params, double t);

/// p_treated / p_control. Throws UndefinedError for t == 0 or alpha == 0.
double exact_risk_ratio(const EpidemicParams& params, double t);

/// The piecewise scaled risk difference RD*(t); same sign as
/// E[Y_1(t)] - E[Y_2(t)].
double risk_difference_star(const EpidemicParams& params, double t);
int risk_difference_sign(const EpidemicParams& params, double t);

/// True when the parameters satisfy the sufficient condition for a
/// long-run reversal of the risk ratio. Requires omega > 0.
bool direction_bias_condition(const EpidemicParams& params);

struct TStarResult {
  double t_star = 0.0;          // refined threshold
  double analytic_bound = 0.0;  // threshold from the sub-case inequality
  const char* sub_case = "";    // e.g. "1.1a", "2.4"
};

/// Returns nullopt when direction_bias_condition() is false.
std::optional<TStarResult> tstar_bound(const EpidemicParams& params);

/// Throws UndefinedError when alpha == 0 (no first infection ever occurs).
FirstInfectionLaw first_infection_law(const EpidemicParams& params);

}  // namespace rrbias
