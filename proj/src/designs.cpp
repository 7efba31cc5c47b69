#include "rrbias/designs.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "rrbias/detail/overloaded.hpp"
#include "rrbias/errors.hpp"

namespace rrbias {
namespace {

using detail::overloaded;

struct WarningSink {
  std::mutex mutex;
  std::function<void(const std::string&)> handler;
  std::set<std::string> seen;
};

WarningSink& warning_sink() {
  static WarningSink sink;
  return sink;
}

// Each distinct message is reported once per process.
void warn_once(const std::string& message) {
  WarningSink& sink = warning_sink();
  std::lock_guard lock(sink.mutex);
  if (!sink.seen.insert(message).second) return;
  if (sink.handler) {
    sink.handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

void check_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, "must be in [0, 1]");
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  WarningSink& sink = warning_sink();
  std::lock_guard lock(sink.mutex);
  sink.handler = std::move(handler);
  sink.seen.clear();
}

void validate(const CovariateScheme& scheme) {
  std::visit(overloaded{
                 [](const BernoulliCovariates& b) { check_probability(b.p, "design.p"); },
                 [](const BlockCovariates& b) {
                   if (b.rule == BlockRule::kExactlyK && b.k < 1) {
                     throw ConfigError("design.block_k", "must be >= 1");
                   }
                 },
                 [](const ClusterRandomizedCovariates& c) {
                   check_probability(c.p, "design.p");
                 },
             },
             scheme);
}

void validate(const ClusterSizeDist& dist) {
  std::visit(overloaded{
                 [](const FixedSize& f) {
                   if (f.n < 1) throw ConfigError("design.n", "must be >= 1");
                 },
                 [](const ShiftedPoissonSize& s) {
                   if (!(s.mean >= 0.0) || !std::isfinite(s.mean)) {
                     throw ConfigError("design.size_mean", "must be finite and >= 0");
                   }
                   if (s.shift < 1) throw ConfigError("design.size_shift", "must be >= 1");
                 },
             },
             dist);
}

void validate(const BaselineScheme& scheme) {
  if (const auto* c = std::get_if<ConditionalBaseline>(&scheme)) {
    check_probability(c->q1, "design.q1");
    check_probability(c->q0, "design.q0");
  }
}

std::string describe(const CovariateScheme& scheme) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const BernoulliCovariates& b) { os << "bernoulli(p=" << b.p << ")"; },
                 [&](const BlockCovariates& b) {
                   switch (b.rule) {
                     case BlockRule::kExactlyK: os << "block(k=" << b.k << ")"; break;
                     case BlockRule::kFloorHalf: os << "block(floor-half)"; break;
                     case BlockRule::kExactlyOne: os << "block(exactly-one)"; break;
                   }
                 },
                 [&](const ClusterRandomizedCovariates& c) {
                   os << "cluster(p=" << c.p << ","
                      << (c.split == ClusterSplit::kCoinFlip ? "coin" : "exact") << ")";
                 },
             },
             scheme);
  return os.str();
}

std::string describe(const ClusterSizeDist& dist) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const FixedSize& f) { os << "fixed(" << f.n << ")"; },
                 [&](const ShiftedPoissonSize& s) {
                   os << "pois(" << s.mean << ")+" << s.shift;
                 },
             },
             dist);
  return os.str();
}

std::string describe(const BaselineScheme& scheme) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const NoBaselineInfection&) { os << "none"; },
                 [&](const ConditionalBaseline& c) {
                   os << "conditional(q1=" << c.q1 << ",q0=" << c.q0 << ")";
                 },
             },
             scheme);
  return os.str();
}

std::size_t block_size(const BlockCovariates& block, std::size_t n) {
  switch (block.rule) {
    case BlockRule::kExactlyK:
      if (block.k > n) {
        warn_once("block size k=" + std::to_string(block.k) +
                  " exceeds cluster size n=" + std::to_string(n) + "; clamped to n");
        return n;
      }
      return block.k;
    case BlockRule::kFloorHalf: return n / 2;
    case BlockRule::kExactlyOne: return n >= 1 ? 1 : 0;
  }
  return 0;
}

std::size_t draw_cluster_size(RandomStream& rng, const ClusterSizeDist& dist) {
  return std::visit(overloaded{
                        [](const FixedSize& f) { return f.n; },
                        [&](const ShiftedPoissonSize& s) {
                          return static_cast<std::size_t>(rng.poisson(s.mean)) + s.shift;
                        },
                    },
                    dist);
}

std::vector<Covariate> assign_covariates(RandomStream& rng, const CovariateScheme& scheme,
                                         std::size_t n) {
  std::vector<Covariate> x(n, 0);
  std::visit(overloaded{
                 [&](const BernoulliCovariates& b) {
                   for (auto& xi : x) xi = rng.bernoulli(b.p) ? 1 : 0;
                 },
                 [&](const BlockCovariates& b) {
                   // Partial Fisher-Yates: the first m slots of a uniform
                   // permutation form a uniform m-subset.
                   const std::size_t m = block_size(b, n);
                   std::vector<std::size_t> order(n);
                   std::iota(order.begin(), order.end(), std::size_t{0});
                   for (std::size_t i = 0; i < m; ++i) {
                     const std::size_t j = i + rng.uniform_index(n - i);
                     std::swap(order[i], order[j]);
                     x[order[i]] = 1;
                   }
                 },
                 [&](const ClusterRandomizedCovariates& c) {
                   const Covariate v = rng.bernoulli(c.p) ? 1 : 0;
                   for (auto& xi : x) xi = v;
                 },
             },
             scheme);
  return x;
}

std::vector<std::uint8_t> assign_baseline(RandomStream& rng, const BaselineScheme& scheme,
                                          std::span<const Covariate> x) {
  std::vector<std::uint8_t> y0(x.size(), 0);
  if (const auto* c = std::get_if<ConditionalBaseline>(&scheme)) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      y0[j] = rng.bernoulli(x[j] ? c->q1 : c->q0) ? 1 : 0;
    }
  }
  return y0;
}

std::vector<std::pair<std::size_t, double>> size_pmf(const ClusterSizeDist& dist,
                                                     double tail_mass) {
  validate(dist);
  if (const auto* f = std::get_if<FixedSize>(&dist)) return {{f->n, 1.0}};
  const auto& s = std::get<ShiftedPoissonSize>(dist);
  if (s.mean == 0.0) return {{s.shift, 1.0}};

  std::vector<std::pair<std::size_t, double>> pmf;
  double cumulative = 0.0;
  const double log_mean = std::log(s.mean);
  for (std::size_t k = 0; cumulative < 1.0 - tail_mass; ++k) {
    const double p = std::exp(-s.mean + static_cast<double>(k) * log_mean -
                              std::lgamma(static_cast<double>(k) + 1.0));
    pmf.emplace_back(k + s.shift, p);
    cumulative += p;
    if (k > 100000) throw SizeLimitError("size distribution tail does not converge");
  }
  for (auto& [n, p] : pmf) p /= cumulative;
  return pmf;
}

std::vector<double> treated_count_pmf(const CovariateScheme& scheme, std::size_t n) {
  std::vector<double> pmf(n + 1, 0.0);
  std::visit(overloaded{
                 [&](const BernoulliCovariates& b) {
                   for (std::size_t k = 0; k <= n; ++k) {
                     const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                               std::lgamma(n - k + 1.0);
                     const double pk = b.p == 0.0 ? (k == 0 ? 1.0 : 0.0)
                                       : b.p == 1.0 ? (k == n ? 1.0 : 0.0)
                                                    : std::exp(log_choose + k * std::log(b.p) +
                                                               (n - k) * std::log1p(-b.p));
                     pmf[k] = pk;
                   }
                 },
                 [&](const BlockCovariates& b) { pmf[block_size(b, n)] = 1.0; },
                 [&](const ClusterRandomizedCovariates& c) {
                   pmf[0] += 1.0 - c.p;
                   pmf[n] += c.p;
                 },
             },
             scheme);
  return pmf;
}

}  // namespace rrbias
