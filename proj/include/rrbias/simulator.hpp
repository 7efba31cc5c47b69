#pragma once

// Event-driven Monte Carlo simulation of cluster cohorts.
//
// Stream layout (fixed, so reruns are bit-stable):
//   cluster i of a study with key K uses RandomStream(derive_key(K, i)) and
//   draws, in order: cluster size, covariates, baseline infections,
//   observation time, then the infection events.
//   Exact-fraction cluster randomization draws its treated set from
//   RandomStream(derive_key(K, kStudyLevelStream)).
//   Index-case batches use derive_key(K, {kIndexBatchBase + batch, i}).
// Each event draws one exponential waiting time at the total susceptible
// rate and, if it lands before the horizon, one uniform to pick the subject.

#include <cstdint>
#include <optional>
#include <vector>

#include "rrbias/designs.hpp"
#include "rrbias/hazard.hpp"
#include "rrbias/rng.hpp"

namespace rrbias {

inline constexpr std::uint64_t kStudyLevelStream = 0xFFFF'FFFF'0000'0001ULL;
inline constexpr std::uint64_t kIndexBatchBase = 0x8000'0000'0000'0000ULL;

struct ObservationRule {
  enum class Kind { kFixed, kExponential };
  Kind kind = Kind::kFixed;
  double value = 450.0;  // fixed T, or the mean of the exponential

  static ObservationRule fixed(double t) { return {Kind::kFixed, t}; }
  static ObservationRule exponential(double mean) { return {Kind::kExponential, mean}; }
};

struct StudyConfig {
  EpidemicParams params;
  CovariateScheme covariates = BlockCovariates{BlockRule::kExactlyK, 2};
  ClusterSizeDist size = FixedSize{4};
  BaselineScheme baseline = NoBaselineInfection{};
  ObservationRule observation;
  std::size_t clusters = 500;
  std::uint64_t master_seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct ClusterOutcome {
  std::vector<Covariate> x;
  std::vector<std::uint8_t> y0;  // infected at baseline
  std::vector<std::uint8_t> yT;  // infected by the end of observation
  std::optional<std::size_t> index;
  double T = 0.0;  // realised observation (follow-up) time

  std::size_t size() const noexcept { return x.size(); }
};

/// Runs the infection process in `state` from state.now up to `horizon`.
/// `scratch` is reused between calls to avoid allocation.
void advance_cluster(RandomStream& rng, ClusterState& state, const EpidemicParams& params,
                     double horizon, SusceptibleHazards& scratch);

ClusterOutcome simulate_cluster(RandomStream& rng, std::vector<Covariate> x,
                                std::vector<std::uint8_t> y0, const EpidemicParams& params,
                                double T);

/// Simulates config.clusters clusters using config.master_seed as study key.
std::vector<ClusterOutcome> simulate_study(const StudyConfig& config);

/// Same, with an explicit study key (used by sweeps to derive per-replicate
/// studies from one master seed).
std::vector<ClusterOutcome> simulate_study(const StudyConfig& config, std::uint64_t study_key);

struct IndexCaseDesign {
  double burn_in = 75.0;    // time from all-uninfected to the baseline visit
  double follow_up = 10.0;  // additional time after baseline
  std::size_t target_selected = 500;
  std::size_t max_batches = 1000;  // attempt budget, in batches of 4 * target
};

/// Two-phase design: simulate from all-uninfected to burn_in, keep clusters
/// with at least one infection, pick an index case uniformly among the
/// infected, then continue for follow_up. The returned y0 is the baseline
/// state and T the follow-up time. Throws ProgressError when the budget is
/// exhausted before enough clusters qualify.
std::vector<ClusterOutcome> run_index_case_design(const StudyConfig& config,
                                                  const IndexCaseDesign& design);
std::vector<ClusterOutcome> run_index_case_design(const StudyConfig& config,
                                                  const IndexCaseDesign& design,
                                                  std::uint64_t study_key);

}  // namespace rrbias
