#pragma once

// Exact transient solution of the within-cluster infection process as a
// Markov chain over infected subsets. State S is a bitmask; subject j moves
// S -> S | (1 << j) at rate e^{x_j beta} (alpha + sum_{k in S} omega e^{x_k gamma}).
// The forward equations are integrated with an adaptive Dormand-Prince
// stepper (absolute 1e-12, relative 1e-10).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rrbias/designs.hpp"
#include "rrbias/estimators.hpp"
#include "rrbias/hazard.hpp"

namespace rrbias {

inline constexpr std::size_t kMaxChainSize = 14;
inline constexpr std::size_t kDefaultMaxEnumeratedSize = 10;

/// Probability of every infected subset at time t, indexed by bitmask.
/// `y0` marks the subjects infected at time zero.
std::vector<double> subset_distribution(std::span<const Covariate> x,
                                        std::span<const std::uint8_t> y0,
                                        const EpidemicParams& params, double t);

/// P(Y_j(t) = 1) for each subject. Subjects in y0 get exactly 1.
std::vector<double> infection_marginals(std::span<const Covariate> x,
                                        std::span<const std::uint8_t> y0,
                                        const EpidemicParams& params, double t);

/// Expected infected fraction at t under beta = gamma = 0 for a cluster of
/// size n, from the chain on the infected count.
double null_cumulative_incidence(std::size_t n, double alpha, double omega, double t);

/// Subject-weighted version over a size distribution:
/// sum_n p(n) n I_n(t) / sum_n p(n) n.
double null_cumulative_incidence(const ClusterSizeDist& dist, double alpha, double omega,
                                 double t);

struct ExactDesign {
  CovariateScheme covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  ClusterSizeDist size = FixedSize{4};
  BaselineScheme baseline = NoBaselineInfection{};
  std::size_t max_cluster_size = kDefaultMaxEnumeratedSize;
};

struct ExactArmRisks {
  double risk1 = 0.0;  // E[infected | x = 1] / E[eligible | x = 1]
  double risk0 = 0.0;
  ArmCounts expected;  // expected eligible and infected counts per cluster
};

/// Averages exact marginals over the covariate, size and baseline
/// distributions. Throws SizeLimitError when a cluster size with positive
/// mass exceeds design.max_cluster_size, NotApplicableError for
/// Exclusion::kExcludeIndexOnly.
ExactArmRisks expected_arm_risks(const ExactDesign& design, const EpidemicParams& params,
                                 double t, Exclusion exclusion = Exclusion::kAllSubjects);

/// risk1 / risk0. Throws UndefinedError when either arm has no eligible
/// subjects or risk0 == 0.
double expected_rr_exact(const ExactDesign& design, const EpidemicParams& params, double t,
                         Exclusion exclusion = Exclusion::kAllSubjects);

}  // namespace rrbias
