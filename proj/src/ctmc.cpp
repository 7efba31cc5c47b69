#include "rrbias/ctmc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>

#include <boost/numeric/odeint.hpp>

#include "rrbias/errors.hpp"

namespace rrbias {
namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

constexpr double kAbsTol = 1e-12;
constexpr double kRelTol = 1e-10;
constexpr double kConservationTol = 1e-9;

// Generator of the subset chain, applied matrix-free.
struct SubsetGenerator {
  std::size_t n = 0;
  std::vector<double> susceptibility;  // e^{x_j beta}
  std::vector<double> force;           // alpha + omega * sum_{k in S} e^{x_k gamma}, per S
  std::vector<double> outflow;         // total exit rate of S

  SubsetGenerator(std::span<const Covariate> x, const EpidemicParams& p) : n(x.size()) {
    const std::size_t states = std::size_t{1} << n;
    susceptibility.resize(n);
    std::vector<double> infectiousness(n);
    for (std::size_t j = 0; j < n; ++j) {
      susceptibility[j] = x[j] ? std::exp(p.beta) : 1.0;
      infectiousness[j] = p.omega * (x[j] ? std::exp(p.gamma) : 1.0);
    }
    force.assign(states, p.alpha);
    outflow.assign(states, 0.0);
    for (std::size_t s = 1; s < states; ++s) {
      const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
      force[s] = force[s & (s - 1)] + infectiousness[low];
    }
    for (std::size_t s = 0; s < states; ++s) {
      double sus = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(s >> j & 1)) sus += susceptibility[j];
      }
      outflow[s] = sus * force[s];
    }
  }

  void operator()(const State& p, State& dp, double /*t*/) const {
    std::fill(dp.begin(), dp.end(), 0.0);
    for (std::size_t s = 0; s < p.size(); ++s) {
      const double mass = p[s];
      if (mass == 0.0) continue;
      dp[s] -= outflow[s] * mass;
      const double f = force[s] * mass;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(s >> j & 1)) dp[s | (std::size_t{1} << j)] += susceptibility[j] * f;
      }
    }
  }
};

// Pure-birth chain on the infected count under the null.
struct CountGenerator {
  std::vector<double> rate;  // k -> k + 1

  CountGenerator(std::size_t n, double alpha, double omega) : rate(n + 1, 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      rate[k] = static_cast<double>(n - k) * (alpha + static_cast<double>(k) * omega);
    }
  }

  void operator()(const State& p, State& dp, double /*t*/) const {
    for (std::size_t k = 0; k < p.size(); ++k) {
      dp[k] = -rate[k] * p[k] + (k > 0 ? rate[k - 1] * p[k - 1] : 0.0);
    }
  }
};

template <class System>
void integrate_forward(const System& system, State& p, double t, const char* what) {
  if (t == 0.0) return;
  const double max_rate = [&] {
    double m = 0.0;
    if constexpr (std::is_same_v<System, SubsetGenerator>) {
      for (double r : system.outflow) m = std::max(m, r);
    } else {
      for (double r : system.rate) m = std::max(m, r);
    }
    return m;
  }();
  if (max_rate == 0.0) return;
  const double dt0 = std::min(t, 0.1 / max_rate);
  try {
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(kAbsTol, kRelTol);
    odeint::integrate_adaptive(stepper, system, p, 0.0, t, dt0);
  } catch (const odeint::odeint_error& e) {
    throw NumericalError(std::string(what) + ": integration failed at t=" + std::to_string(t) +
                         ": " + e.what());
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(std::fabs(total - 1.0) <= kConservationTol)) {
    throw NumericalError(std::string(what) + ": probability mass " + std::to_string(total) +
                         " after integrating to t=" + std::to_string(t));
  }
  for (double& v : p) v = std::max(v, 0.0);
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t", "must be finite and >= 0");
}

}  // namespace

std::vector<double> subset_distribution(std::span<const Covariate> x,
                                        std::span<const std::uint8_t> y0,
                                        const EpidemicParams& params, double t) {
  params.validate();
  check_time(t);
  const std::size_t n = x.size();
  if (n > kMaxChainSize) {
    throw SizeLimitError("subset chain for n=" + std::to_string(n) + " exceeds the cap of " +
                         std::to_string(kMaxChainSize) + " subjects");
  }
  if (y0.size() != n) throw ConfigError("y0", "length must match the covariate vector");

  std::size_t start = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (y0[j]) start |= std::size_t{1} << j;
  }
  State p(std::size_t{1} << n, 0.0);
  p[start] = 1.0;
  integrate_forward(SubsetGenerator(x, params), p, t, "subset chain");
  return p;
}

std::vector<double> infection_marginals(std::span<const Covariate> x,
                                        std::span<const std::uint8_t> y0,
                                        const EpidemicParams& params, double t) {
  const State p = subset_distribution(x, y0, params, t);
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s >> j & 1) m[j] += p[s];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    m[j] = y0[j] ? 1.0 : std::clamp(m[j], 0.0, 1.0);
  }
  return m;
}

double null_cumulative_incidence(std::size_t n, double alpha, double omega, double t) {
  EpidemicParams{alpha, omega, 0.0, 0.0}.validate();
  check_time(t);
  if (n < 1) throw ConfigError("n", "must be >= 1");
  if (omega == 0.0) return -std::expm1(-alpha * t);

  State p(n + 1, 0.0);
  p[0] = 1.0;
  integrate_forward(CountGenerator(n, alpha, omega), p, t, "count chain");
  double mean = 0.0;
  for (std::size_t k = 1; k <= n; ++k) mean += static_cast<double>(k) * p[k];
  return std::clamp(mean / static_cast<double>(n), 0.0, 1.0);
}

double null_cumulative_incidence(const ClusterSizeDist& dist, double alpha, double omega,
                                 double t) {
  double weighted = 0.0, subjects = 0.0;
  for (const auto& [n, p] : size_pmf(dist)) {
    const double w = p * static_cast<double>(n);
    weighted += w * null_cumulative_incidence(n, alpha, omega, t);
    subjects += w;
  }
  return weighted / subjects;
}

ExactArmRisks expected_arm_risks(const ExactDesign& design, const EpidemicParams& params,
                                 double t, Exclusion exclusion) {
  validate(design.covariates);
  validate(design.baseline);
  if (exclusion == Exclusion::kExcludeIndexOnly) {
    throw NotApplicableError("exclude-index-only has no exact counterpart");
  }
  const std::size_t cap = std::min(design.max_cluster_size, kMaxChainSize);

  auto binomial_pmf = [](std::size_t m, double q) {
    std::vector<double> pmf(m + 1, 0.0);
    for (std::size_t k = 0; k <= m; ++k) {
      if (q == 0.0) {
        pmf[k] = k == 0 ? 1.0 : 0.0;
      } else if (q == 1.0) {
        pmf[k] = k == m ? 1.0 : 0.0;
      } else {
        pmf[k] = std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                          k * std::log(q) + (m - k) * std::log1p(-q));
      }
    }
    return pmf;
  };

  const auto* cond = std::get_if<ConditionalBaseline>(&design.baseline);
  ExactArmRisks out;
  ArmCounts& acc = out.expected;

  // Marginals depend on the assignment only through the composition
  // (treated count, infected-at-baseline counts per arm), so one
  // representative per composition suffices.
  for (const auto& [n, pn] : size_pmf(design.size)) {
    if (n > cap) {
      throw SizeLimitError("cluster size " + std::to_string(n) +
                           " exceeds the exact enumeration cap of " + std::to_string(cap));
    }
    const std::vector<double> pk = treated_count_pmf(design.covariates, n);
    for (std::size_t k1 = 0; k1 <= n; ++k1) {
      if (pk[k1] == 0.0) continue;
      const std::size_t k0 = n - k1;
      const std::vector<double> b1 = cond ? binomial_pmf(k1, cond->q1) : std::vector<double>{1.0};
      const std::vector<double> b0 = cond ? binomial_pmf(k0, cond->q0) : std::vector<double>{1.0};
      std::vector<Covariate> x(n, 0);
      std::fill_n(x.begin(), k1, Covariate{1});
      for (std::size_t i1 = 0; i1 < b1.size(); ++i1) {
        for (std::size_t i0 = 0; i0 < b0.size(); ++i0) {
          const double w = pn * pk[k1] * b1[i1] * b0[i0];
          if (w == 0.0) continue;
          std::vector<std::uint8_t> y0(n, 0);
          std::fill_n(y0.begin(), i1, std::uint8_t{1});
          std::fill_n(y0.begin() + static_cast<std::ptrdiff_t>(k1), i0, std::uint8_t{1});
          const std::vector<double> m = infection_marginals(x, y0, params, t);
          for (std::size_t j = 0; j < n; ++j) {
            if (exclusion == Exclusion::kExcludeBaselineInfected && y0[j]) continue;
            if (x[j]) {
              acc.total1 += w;
              acc.infected1 += w * m[j];
            } else {
              acc.total0 += w;
              acc.infected0 += w * m[j];
            }
          }
        }
      }
    }
  }
  out.risk1 = acc.total1 > 0.0 ? acc.infected1 / acc.total1 : 0.0;
  out.risk0 = acc.total0 > 0.0 ? acc.infected0 / acc.total0 : 0.0;
  return out;
}

double expected_rr_exact(const ExactDesign& design, const EpidemicParams& params, double t,
                         Exclusion exclusion) {
  const ExactArmRisks r = expected_arm_risks(design, params, t, exclusion);
  if (!(r.expected.total1 > 0.0) || !(r.expected.total0 > 0.0)) {
    throw UndefinedError("an arm has no eligible subjects under this design");
  }
  if (!(r.risk0 > 0.0)) throw UndefinedError("control-arm risk is zero");
  return r.risk1 / r.risk0;
}

}  // namespace rrbias
