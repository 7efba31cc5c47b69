#include "rrbias/hazard.hpp"

#include <cmath>

#include "rrbias/errors.hpp"

namespace rrbias {

void EpidemicParams::validate() const {
  auto check_rate = [](double v, const char* name) {
    if (!std::isfinite(v)) throw ConfigError(name, "must be finite");
    if (v < 0.0) throw ConfigError(name, "must be >= 0");
  };
  check_rate(alpha, "alpha");
  check_rate(omega, "omega");
  if (!std::isfinite(beta)) throw ConfigError("beta", "must be finite");
  if (!std::isfinite(gamma)) throw ConfigError("gamma", "must be finite");
}

bool EpidemicParams::valid() const noexcept {
  return std::isfinite(alpha) && std::isfinite(omega) && std::isfinite(beta) &&
         std::isfinite(gamma) && alpha >= 0.0 && omega >= 0.0;
}

ClusterState::ClusterState(std::vector<Covariate> covariates)
    : x(std::move(covariates)), y(x.size(), 0), t_inf(x.size()) {}

void ClusterState::infect(std::size_t j) {
  y[j] = 1;
  t_inf[j] = now;
}

bool ClusterState::consistent() const noexcept {
  if (y.size() != x.size() || t_inf.size() != x.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > 1) return false;
    const bool has_time = t_inf[j].has_value();
    if ((y[j] == 1) != has_time) return false;
    if (has_time && (*t_inf[j] < 0.0 || *t_inf[j] > now)) return false;
  }
  return true;
}

double individual_hazard(const EpidemicParams& params, Covariate x_j,
                         std::span<const Covariate> infected_covariates) {
  double force = params.alpha;
  for (Covariate xk : infected_covariates) {
    force += xk ? params.omega * std::exp(params.gamma) : params.omega;
  }
  return x_j ? std::exp(params.beta) * force : force;
}

void total_susceptible_hazard(const ClusterState& state,
                              const EpidemicParams& params,
                              SusceptibleHazards& out) {
  out.total = 0.0;
  out.subjects.clear();
  out.rates.clear();

  // Full within-cluster mixing: every susceptible sees the same force.
  double force = params.alpha;
  const double infectious_treated = params.omega * std::exp(params.gamma);
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state.y[k]) force += state.x[k] ? infectious_treated : params.omega;
  }
  const double susceptibility_treated = std::exp(params.beta);

  for (std::size_t j = 0; j < state.size(); ++j) {
    if (state.y[j]) continue;
    const double rate = state.x[j] ? susceptibility_treated * force : force;
    out.subjects.push_back(j);
    out.rates.push_back(rate);
    out.total += rate;
  }
}

SusceptibleHazards total_susceptible_hazard(const ClusterState& state,
                                            const EpidemicParams& params) {
  SusceptibleHazards out;
  total_susceptible_hazard(state, params, out);
  return out;
}

}  // namespace rrbias
