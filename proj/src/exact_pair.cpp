#include "rrbias/exact_pair.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rrbias/errors.hpp"

namespace rrbias {
namespace {

// Rates of the two-person process. `gap_treated` = rate_after_control -
// first_rate and `gap_control` = first_rate - rate_after_treated, evaluated
// directly from the parameters so that exact coincidences stay exact.
struct PairRates {
  double eb = 1.0;            // e^beta
  double omega_eb = 0.0;      // omega e^beta
  double omega_eg = 0.0;      // omega e^gamma
  double alpha_eb = 0.0;      // alpha e^beta
  double first = 0.0;         // alpha (e^beta + 1)
  double treated_late = 0.0;  // e^beta (alpha + omega)
  double control_late = 0.0;  // alpha + omega e^gamma
  double gap_treated = 0.0;   // e^beta omega - alpha
  double gap_control = 0.0;   // alpha e^beta - omega e^gamma
  bool treated_degenerate = false;
  bool control_degenerate = false;
};

bool nearly_equal(double u, double v) {
  return std::abs(u - v) <= kBranchTolerance * std::max(std::abs(u), std::abs(v));
}

PairRates pair_rates(const EpidemicParams& p) {
  PairRates r;
  r.eb = std::exp(p.beta);
  r.omega_eb = p.omega * r.eb;
  r.omega_eg = p.omega * std::exp(p.gamma);
  r.alpha_eb = p.alpha * r.eb;
  r.first = r.alpha_eb + p.alpha;
  r.treated_late = r.eb * (p.alpha + p.omega);
  r.control_late = p.alpha + r.omega_eg;
  r.gap_treated = r.omega_eb - p.alpha;
  r.gap_control = r.alpha_eb - r.omega_eg;
  r.treated_degenerate = nearly_equal(r.omega_eb, p.alpha);
  r.control_degenerate = nearly_equal(r.alpha_eb, r.omega_eg);
  return r;
}

// (e^{-u t} - e^{-v t}) / (v - u) for rates u, v with v - u == gap, written
// as t e^{-min t} (1 - e^{-|gap| t}) / (|gap| t) so it never cancels.
double divided_difference(double u, double v, double gap, double t,
                          bool degenerate) {
  const double lower = std::min(u, v);
  const double base = t * std::exp(-lower * t);
  if (degenerate) return base;
  const double z = std::abs(gap) * t;
  if (z == 0.0) return base;
  return base * (-std::expm1(-z) / z);
}

PairBranch branch_of(const PairRates& r) {
  if (r.treated_degenerate && r.control_degenerate) return PairBranch::kBothDegenerate;
  if (r.treated_degenerate) return PairBranch::kTreatedDegenerate;
  if (r.control_degenerate) return PairBranch::kControlDegenerate;
  return PairBranch::kGeneric;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t", "must be finite and >= 0");
}

}  // namespace

const char* to_string(PairBranch branch) noexcept {
  switch (branch) {
    case PairBranch::kGeneric: return "generic";
    case PairBranch::kTreatedDegenerate: return "treated-degenerate";
    case PairBranch::kControlDegenerate: return "control-degenerate";
    case PairBranch::kBothDegenerate: return "both-degenerate";
  }
  return "unknown";
}

PairEvaluation expected_infection_probs(const EpidemicParams& params, double t) {
  params.validate();
  require_time(t);
  const PairRates r = pair_rates(params);

  // Conditioning on who is infected first:
  //   E[Y_1] = 1 - e^{-b t} - omega e^beta DD(a, b)
  //   E[Y_2] = 1 - e^{-d t} - omega e^gamma DD(a, d)
  // with a the first-infection rate and b, d the post-infection rates.
  const double dd_treated = divided_difference(
      r.first, r.treated_late, r.gap_treated, t, r.treated_degenerate);
  const double dd_control = divided_difference(
      r.first, r.control_late, r.gap_control, t, r.control_degenerate);

  PairEvaluation ev;
  ev.branch = branch_of(r);
  ev.s_treated = std::exp(-r.treated_late * t) + r.omega_eb * dd_treated;
  ev.s_control = std::exp(-r.control_late * t) + r.omega_eg * dd_control;
  ev.p_treated = -std::expm1(-r.treated_late * t) - r.omega_eb * dd_treated;
  ev.p_control = -std::expm1(-r.control_late * t) - r.omega_eg * dd_control;
  ev.p_treated = std::clamp(ev.p_treated, 0.0, 1.0);
  ev.p_control = std::clamp(ev.p_control, 0.0, 1.0);
  ev.s_treated = std::clamp(ev.s_treated, 0.0, 1.0);
  ev.s_control = std::clamp(ev.s_control, 0.0, 1.0);
  if (ev.p_control > 0.0) ev.rr = ev.p_treated / ev.p_control;
  return ev;
}

double exact_risk_ratio(const EpidemicParams& params, double t) {
  if (t == 0.0) throw UndefinedError("risk ratio is 0/0 at t = 0");
  if (params.alpha == 0.0) {
    throw UndefinedError("risk ratio requires alpha > 0 (no infections otherwise)");
  }
  const PairEvaluation ev = expected_infection_probs(params, t);
  if (!ev.rr) throw UndefinedError("control-arm infection probability underflowed to 0");
  return *ev.rr;
}

double risk_difference_star(const EpidemicParams& params, double t) {
  params.validate();
  require_time(t);
  const PairRates r = pair_rates(params);
  const double e2b = std::exp(2.0 * params.beta);
  const double eg = std::exp(params.gamma);
  const double w = params.omega;
  const double a = params.alpha;
  const double decay_first = std::exp(-r.first * t);
  const double decay_treated = std::exp(-r.treated_late * t);
  const double decay_control = std::exp(-r.control_late * t);

  switch (branch_of(r)) {
    case PairBranch::kGeneric: {
      const double num = w * (e2b - eg) * decay_first +
                         (r.omega_eg - r.alpha_eb) * decay_treated +
                         r.eb * (a - r.omega_eb) * decay_control;
      return num / ((a - r.omega_eb) * (r.alpha_eb - r.omega_eg));
    }
    case PairBranch::kTreatedDegenerate:
      return (r.eb * decay_control - (r.eb + t * r.gap_control) * decay_first) /
             r.gap_control;
    case PairBranch::kControlDegenerate:
      return ((1.0 + t * r.eb * (a - r.omega_eb)) * decay_first - decay_treated) /
             (a - r.omega_eb);
    case PairBranch::kBothDegenerate:
      return t * (r.eb - 1.0);
  }
  return 0.0;
}

int risk_difference_sign(const EpidemicParams& params, double t) {
  return sign_of(risk_difference_star(params, t));
}

bool direction_bias_condition(const EpidemicParams& params) {
  params.validate();
  if (params.omega == 0.0) {
    throw NotApplicableError("direction bias condition requires omega > 0");
  }
  const double eb = std::exp(params.beta);
  const double eg = std::exp(params.gamma);
  const double e2b = std::exp(2.0 * params.beta);
  const double mixed = eb + (params.alpha / params.omega) * (eb - 1.0);
  if (params.beta < 0.0) return eg < std::min(e2b, mixed);
  if (params.beta > 0.0) return eg > std::max(e2b, mixed);
  return false;
}

namespace {

// Positive root of e^u = 1 + c u for c > 1.
double exp_linear_root(double c) {
  auto g = [c](double u) { return std::expm1(u) - c * u; };
  double hi = 1.0;
  while (g(hi) <= 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return hi;
}

struct AnalyticThreshold {
  double bound;
  const char* sub_case;
};

// Sufficient reversal thresholds, one per parameter case.
AnalyticThreshold analytic_threshold(const EpidemicParams& p) {
  const PairRates r = pair_rates(p);
  const double w = p.omega;
  const double a = p.alpha;
  const double eb = r.eb;
  const double eg = std::exp(p.gamma);
  const double e2b = std::exp(2.0 * p.beta);
  const double ratio = a / w;

  if (p.beta < 0.0) {
    if (r.treated_degenerate) {
      const double k = r.gap_control;
      return {exp_linear_root(1.0 / eb) / k, "1.3"};
    }
    if (r.control_degenerate) {
      return {1.0 / (eb * (r.omega_eb - a)), "1.4"};
    }
    if (eb > ratio) {
      if (r.gap_control < 0.0) {
        return {(std::log(eb * (r.omega_eb - a)) - std::log(w * (e2b - eg))) /
                    (r.omega_eg - r.alpha_eb),
                "1.1a"};
      }
      return {(std::log(w * (e2b - eg)) - std::log(eb * (r.omega_eb - a))) /
                  (r.alpha_eb - r.omega_eg),
              "1.1b"};
    }
    return {(std::log(r.gap_control) - std::log(eb * (a - r.omega_eb))) /
                (r.treated_late - r.control_late),
            "1.2"};
  }

  if (r.treated_degenerate) {
    return {eb / (r.omega_eg - r.alpha_eb), "2.3"};
  }
  if (r.control_degenerate) {
    const double k = a - r.omega_eb;
    return {exp_linear_root(eb) / k, "2.4"};
  }
  if (eb < ratio) {
    if (r.gap_control < 0.0) {
      return {(std::log(w * (eg - e2b)) - std::log(r.omega_eg - r.alpha_eb)) /
                  (a - r.omega_eb),
              "2.1a"};
    }
    return {(std::log(eb * (a - r.omega_eb)) - std::log(r.gap_control)) /
                ((a - r.omega_eb) - r.gap_control),
            "2.1b"};
  }
  return {(std::log(r.omega_eg - r.alpha_eb) - std::log(w * (eg - e2b))) /
              (r.omega_eb - a),
          "2.2"};
}

}  // namespace

std::optional<TStarResult> tstar_bound(const EpidemicParams& params) {
  if (!direction_bias_condition(params)) return std::nullopt;
  if (params.alpha == 0.0) return std::nullopt;

  const int target = params.beta < 0.0 ? 1 : -1;
  auto reversed = [&](double t) {
    const PairEvaluation ev = expected_infection_probs(params, t);
    if (!ev.rr) return false;
    return risk_difference_sign(params, t) == target && sign_of(*ev.rr - 1.0) == target;
  };

  const AnalyticThreshold analytic = analytic_threshold(params);
  TStarResult result;
  result.analytic_bound = analytic.bound;
  result.sub_case = analytic.sub_case;

  // Start just beyond the analytic threshold; if rounding defeats it, walk up.
  double hi = std::isfinite(analytic.bound) && analytic.bound > 0.0
                  ? analytic.bound * (1.0 + 1e-9)
                  : 1.0 / params.alpha;
  for (int i = 0; !reversed(hi); ++i) {
    if (i > 400) throw NumericalError("tstar: no reversed-sign time found above the analytic bound");
    hi *= 1.5;
  }

  constexpr std::array<double, 4> kPersistence{1.0, 2.0, 5.0, 10.0};
  double floor_t = 0.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    // The sign near t = 0 is sign(beta), so halving eventually leaves the
    // reversed region.
    double lo = hi;
    while (lo > floor_t && reversed(lo)) lo *= 0.5;
    lo = std::max(lo, floor_t);
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (reversed(mid) ? hi : lo) = mid;
    }

    double failed_at = 0.0;
    for (double m : kPersistence) {
      if (!reversed(m * hi)) {
        failed_at = m * hi;
        break;
      }
    }
    if (failed_at == 0.0) {
      result.t_star = hi;
      return result;
    }
    // Another sign change beyond the candidate: restart above it.
    floor_t = failed_at;
    hi = std::max(failed_at, analytic.bound) * (1.0 + 1e-9);
    for (int i = 0; !reversed(hi); ++i) {
      if (i > 400) throw NumericalError("tstar: sign did not stabilise");
      hi *= 1.5;
    }
  }
  throw NumericalError("tstar: persistence check failed repeatedly");
}

FirstInfectionLaw first_infection_law(const EpidemicParams& params) {
  params.validate();
  if (params.alpha == 0.0) {
    throw UndefinedError("first infection never occurs when alpha == 0");
  }
  FirstInfectionLaw law;
  law.rate = params.alpha * (std::exp(params.beta) + 1.0);
  law.p_first_is_treated = 1.0 / (1.0 + std::exp(-params.beta));
  return law;
}

}  // namespace rrbias
