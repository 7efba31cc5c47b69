#pragma once

// Study-design generators: cluster sizes, covariate assignment and
// baseline infection.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rrbias/hazard.hpp"
#include "rrbias/rng.hpp"

namespace rrbias {

struct BernoulliCovariates {
  double p = 0.5;
};

enum class BlockRule { kExactlyK, kFloorHalf, kExactlyOne };

/// Exactly `k` (or floor(n/2), or one) subjects per cluster get x = 1,
/// uniformly over subsets of that size.
struct BlockCovariates {
  BlockRule rule = BlockRule::kExactlyK;
  std::size_t k = 1;
};

enum class ClusterSplit {
  kCoinFlip,       // each cluster treated independently with probability p
  kExactFraction,  // round(p * N) clusters treated, chosen uniformly
};

/// Whole clusters are all-treated or all-control.
struct ClusterRandomizedCovariates {
  double p = 0.5;
  ClusterSplit split = ClusterSplit::kCoinFlip;
};

using CovariateScheme =
    std::variant<BernoulliCovariates, BlockCovariates, ClusterRandomizedCovariates>;

struct FixedSize {
  std::size_t n = 4;
};

/// n = Poisson(mean) + shift.
struct ShiftedPoissonSize {
  double mean = 1.0;
  std::size_t shift = 1;
};

using ClusterSizeDist = std::variant<FixedSize, ShiftedPoissonSize>;

struct NoBaselineInfection {};

/// Pr[Y(0) = 1 | x = 1] = q1, Pr[Y(0) = 1 | x = 0] = q0, independently.
struct ConditionalBaseline {
  double q1 = 0.0;
  double q0 = 0.0;
};

using BaselineScheme = std::variant<NoBaselineInfection, ConditionalBaseline>;

void validate(const CovariateScheme& scheme);
void validate(const ClusterSizeDist& dist);
void validate(const BaselineScheme& scheme);

std::string describe(const CovariateScheme& scheme);
std::string describe(const ClusterSizeDist& dist);
std::string describe(const BaselineScheme& scheme);

/// Number of treated subjects a block rule yields in a cluster of size n.
/// Exactly-k with k > n clamps to n and emits a warning.
std::size_t block_size(const BlockCovariates& block, std::size_t n);

std::size_t draw_cluster_size(RandomStream& rng, const ClusterSizeDist& dist);

/// Per-cluster covariate draw. For ClusterRandomized with kExactFraction the
/// per-cluster decision is made by the caller (see simulate_study); this
/// function then falls back to a coin flip.
std::vector<Covariate> assign_covariates(RandomStream& rng,
                                         const CovariateScheme& scheme, std::size_t n);

std::vector<std::uint8_t> assign_baseline(RandomStream& rng, const BaselineScheme& scheme,
                                          std::span<const Covariate> x);

/// Truncated size distribution: (n, probability) pairs whose unnormalised
/// mass reaches at least 1 - tail_mass, renormalised to sum to one.
std::vector<std::pair<std::size_t, double>> size_pmf(const ClusterSizeDist& dist,
                                                     double tail_mass = 1e-9);

/// Distribution of the number of treated subjects in a cluster of size n.
std::vector<double> treated_count_pmf(const CovariateScheme& scheme, std::size_t n);

/// Receives design warnings (e.g. block-size clamping). Defaults to stderr.
void set_warning_handler(std::function<void(const std::string&)> handler);

}  // namespace rrbias
