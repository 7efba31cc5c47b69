#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rrbias {

/// Constant-force susceptible-infective model parameters.
///
/// A susceptible subject with covariate x_j faces the hazard
///   e^{x_j beta} * (alpha + sum_{k infected} omega * e^{x_k gamma}).
struct EpidemicParams {
  double alpha = 0.0;  // exogenous force of infection, per unit time
  double omega = 0.0;  // pairwise within-cluster transmission rate
  double beta = 0.0;   // log susceptibility effect of x = 1
  double gamma = 0.0;  // log infectiousness effect of x = 1

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  bool valid() const noexcept;
};

using Covariate = std::uint8_t;  // 0 or 1

/// Infection state of a single cluster at time `now`.
struct ClusterState {
  std::vector<Covariate> x;
  std::vector<std::uint8_t> y;
  std::vector<std::optional<double>> t_inf;
  double now = 0.0;

  ClusterState() = default;
  explicit ClusterState(std::vector<Covariate> covariates);

  std::size_t size() const noexcept { return x.size(); }
  /// Marks subject j infected at the current time.
  void infect(std::size_t j);
  /// Checks the y / t_inf / now consistency invariants.
  bool consistent() const noexcept;
};

double individual_hazard(const EpidemicParams& params, Covariate x_j,
                         std::span<const Covariate> infected_covariates);

struct SusceptibleHazards {
  double total = 0.0;
  std::vector<std::size_t> subjects;  // indices with y == 0
  std::vector<double> rates;          // aligned with `subjects`
};

SusceptibleHazards total_susceptible_hazard(const ClusterState& state,
                                            const EpidemicParams& params);

/// Same as above but reuses `out` to avoid reallocating inside event loops.
void total_susceptible_hazard(const ClusterState& state,
                              const EpidemicParams& params,
                              SusceptibleHazards& out);

inline double hazard_ratio(const EpidemicParams& params) {
  return std::exp(params.beta);
}

}  // namespace rrbias

