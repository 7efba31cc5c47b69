#include "rrbias/simulator.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rrbias/errors.hpp"

namespace rrbias {

void StudyConfig::validate() const {
  params.validate();
  rrbias::validate(covariates);
  rrbias::validate(size);
  rrbias::validate(baseline);
  const char* obs_field = observation.kind == ObservationRule::Kind::kFixed
                              ? "t"
                              : "observation.mean";
  if (!(observation.value > 0.0) || !std::isfinite(observation.value)) {
    throw ConfigError(obs_field, "must be finite and > 0");
  }
  if (clusters < 1) throw ConfigError("study.clusters", "must be >= 1");
}

void advance_cluster(RandomStream& rng, ClusterState& state, const EpidemicParams& params,
                     double horizon, SusceptibleHazards& scratch) {
  for (;;) {
    total_susceptible_hazard(state, params, scratch);
    if (!(scratch.total > 0.0)) break;
    const double wait = rng.exponential(scratch.total);
    if (state.now + wait > horizon) break;
    state.now += wait;

    // Competing risks: the next infection falls on subject j with
    // probability rate_j / total.
    const double u = rng.uniform() * scratch.total;
    double cumulative = 0.0;
    std::size_t chosen = scratch.subjects.back();
    for (std::size_t s = 0; s < scratch.subjects.size(); ++s) {
      cumulative += scratch.rates[s];
      if (u < cumulative) {
        chosen = scratch.subjects[s];
        break;
      }
    }
    state.infect(chosen);
  }
  state.now = horizon;
}

ClusterOutcome simulate_cluster(RandomStream& rng, std::vector<Covariate> x,
                                std::vector<std::uint8_t> y0, const EpidemicParams& params,
                                double T) {
  ClusterState state(x);
  for (std::size_t j = 0; j < y0.size(); ++j) {
    if (y0[j]) state.infect(j);
  }
  SusceptibleHazards scratch;
  advance_cluster(rng, state, params, T, scratch);

  ClusterOutcome out;
  out.x = std::move(x);
  out.y0 = std::move(y0);
  out.yT = std::move(state.y);
  out.T = T;
  return out;
}

namespace {

double draw_observation_time(RandomStream& rng, const ObservationRule& rule) {
  if (rule.kind == ObservationRule::Kind::kFixed) return rule.value;
  return rng.exponential(1.0 / rule.value);
}

// Treated flags for exact-fraction cluster randomization.
std::vector<std::uint8_t> exact_fraction_assignment(std::size_t clusters, double p,
                                                    std::uint64_t study_key) {
  const auto treated = static_cast<std::size_t>(std::llround(p * static_cast<double>(clusters)));
  RandomStream rng(derive_key(study_key, kStudyLevelStream));
  std::vector<std::size_t> order(clusters);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint8_t> flags(clusters, 0);
  for (std::size_t i = 0; i < treated; ++i) {
    const std::size_t j = i + rng.uniform_index(clusters - i);
    std::swap(order[i], order[j]);
    flags[order[i]] = 1;
  }
  return flags;
}

}  // namespace

std::vector<ClusterOutcome> simulate_study(const StudyConfig& config) {
  return simulate_study(config, config.master_seed);
}

std::vector<ClusterOutcome> simulate_study(const StudyConfig& config, std::uint64_t study_key) {
  config.validate();

  std::vector<std::uint8_t> exact_treated;
  if (const auto* c = std::get_if<ClusterRandomizedCovariates>(&config.covariates);
      c != nullptr && c->split == ClusterSplit::kExactFraction) {
    exact_treated = exact_fraction_assignment(config.clusters, c->p, study_key);
  }

  std::vector<ClusterOutcome> outcomes;
  outcomes.reserve(config.clusters);
  SusceptibleHazards scratch;
  for (std::size_t i = 0; i < config.clusters; ++i) {
    RandomStream rng(derive_key(study_key, i));
    const std::size_t n = draw_cluster_size(rng, config.size);
    std::vector<Covariate> x = exact_treated.empty()
                                   ? assign_covariates(rng, config.covariates, n)
                                   : std::vector<Covariate>(n, exact_treated[i]);
    std::vector<std::uint8_t> y0 = assign_baseline(rng, config.baseline, x);
    const double T = draw_observation_time(rng, config.observation);

    ClusterState state(x);
    for (std::size_t j = 0; j < n; ++j) {
      if (y0[j]) state.infect(j);
    }
    advance_cluster(rng, state, config.params, T, scratch);

    ClusterOutcome& out = outcomes.emplace_back();
    out.x = std::move(x);
    out.y0 = std::move(y0);
    out.yT = std::move(state.y);
    out.T = T;
  }
  return outcomes;
}

std::vector<ClusterOutcome> run_index_case_design(const StudyConfig& config,
                                                  const IndexCaseDesign& design) {
  return run_index_case_design(config, design, config.master_seed);
}

std::vector<ClusterOutcome> run_index_case_design(const StudyConfig& config,
                                                  const IndexCaseDesign& design,
                                                  std::uint64_t study_key) {
  config.validate();
  if (!(design.burn_in > 0.0) || !std::isfinite(design.burn_in)) {
    throw ConfigError("study.burn_in", "must be finite and > 0");
  }
  if (!(design.follow_up > 0.0) || !std::isfinite(design.follow_up)) {
    throw ConfigError("study.follow_up", "must be finite and > 0");
  }
  if (design.target_selected < 1) throw ConfigError("study.target_selected", "must be >= 1");

  const std::size_t batch_size = 4 * design.target_selected;
  std::vector<ClusterOutcome> selected;
  selected.reserve(design.target_selected);
  SusceptibleHazards scratch;
  std::vector<std::size_t> infected;

  for (std::size_t batch = 0; batch < design.max_batches; ++batch) {
    for (std::size_t i = 0; i < batch_size; ++i) {
      RandomStream rng(derive_key(study_key, {kIndexBatchBase + batch, i}));
      const std::size_t n = draw_cluster_size(rng, config.size);
      std::vector<Covariate> x = assign_covariates(rng, config.covariates, n);

      ClusterState state(x);
      advance_cluster(rng, state, config.params, design.burn_in, scratch);

      infected.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (state.y[j]) infected.push_back(j);
      }
      if (infected.empty()) continue;

      ClusterOutcome out;
      out.index = infected[rng.uniform_index(infected.size())];
      out.y0 = state.y;
      // Constant hazards are memoryless, so continuing the same state is
      // equivalent to restarting the clock at the baseline visit.
      advance_cluster(rng, state, config.params, design.burn_in + design.follow_up, scratch);
      out.x = std::move(x);
      out.yT = std::move(state.y);
      out.T = design.follow_up;
      selected.push_back(std::move(out));
      if (selected.size() == design.target_selected) return selected;
    }
  }
  throw ProgressError("index-case design: only " + std::to_string(selected.size()) + " of " +
                      std::to_string(design.target_selected) +
                      " clusters had a baseline infection after " +
                      std::to_string(design.max_batches) + " batches of " +
                      std::to_string(batch_size));
}

}  // namespace rrbias
