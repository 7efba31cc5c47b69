#include "rrbias/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "rrbias/calibration.hpp"
#include "rrbias/errors.hpp"

namespace rrbias {
namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "mode",
    "alpha",
    "omega",
    "t",
    "target_incidence",
    "seed",
    "design.covariate",
    "design.p",
    "design.block_rule",
    "design.block_k",
    "design.cluster_split",
    "design.size",
    "design.n",
    "design.size_mean",
    "design.size_shift",
    "design.baseline",
    "design.q1",
    "design.q0",
    "design.max_exact_n",
    "observation.rule",
    "observation.mean",
    "study.clusters",
    "study.replicates",
    "study.index_case",
    "study.burn_in",
    "study.follow_up",
    "study.max_batches",
    "estimate.exclusion",
    "estimate.aggregator",
    "estimate.z_threshold",
    "estimate.continuity_correction",
    "grid.beta_min",
    "grid.beta_max",
    "grid.beta_step",
    "grid.gamma_min",
    "grid.gamma_max",
    "grid.gamma_step",
    "run.workers",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Entries {
 public:
  explicit Entries(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> text(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> real(const std::string& key) const {
    auto v = text(key);
    if (!v) return std::nullopt;
    double out = 0.0;
    const char* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected a number, got '" + *v + "'");
    return out;
  }

  std::optional<std::uint64_t> integer(const std::string& key) const {
    auto v = text(key);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    const char* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError(key, "expected a non-negative integer, got '" + *v + "'");
    }
    return out;
  }

  std::optional<bool> boolean(const std::string& key) const {
    auto v = text(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + *v + "'");
  }

  template <class T>
  T choice(const std::string& key, T fallback,
           std::initializer_list<std::pair<const char*, T>> options) const {
    auto v = text(key);
    if (!v) return fallback;
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (*v == name) return value;
      allowed += allowed.empty() ? name : std::string("|") + name;
    }
    throw ConfigError(key, "expected one of " + allowed + ", got '" + *v + "'");
  }

 private:
  std::map<std::string, std::string> values_;
};

CovariateScheme build_covariates(const Entries& e) {
  enum class Kind { kBernoulli, kBlock, kCluster };
  const Kind kind = e.choice("design.covariate", Kind::kBlock,
                             {{"bernoulli", Kind::kBernoulli},
                              {"block", Kind::kBlock},
                              {"cluster", Kind::kCluster}});
  const double p = e.real("design.p").value_or(0.5);
  switch (kind) {
    case Kind::kBernoulli: return BernoulliCovariates{p};
    case Kind::kBlock: {
      BlockCovariates b;
      b.rule = e.choice("design.block_rule", BlockRule::kExactlyK,
                        {{"exactly-k", BlockRule::kExactlyK},
                         {"floor-half", BlockRule::kFloorHalf},
                         {"exactly-one", BlockRule::kExactlyOne}});
      b.k = static_cast<std::size_t>(e.integer("design.block_k").value_or(2));
      return b;
    }
    case Kind::kCluster: {
      ClusterRandomizedCovariates c;
      c.p = p;
      c.split = e.choice("design.cluster_split", ClusterSplit::kCoinFlip,
                         {{"coin", ClusterSplit::kCoinFlip}, {"exact", ClusterSplit::kExactFraction}});
      return c;
    }
  }
  return BlockCovariates{};
}

ClusterSizeDist build_size(const Entries& e) {
  const bool poisson = e.choice("design.size", false, {{"fixed", false}, {"shifted-poisson", true}});
  if (!poisson) return FixedSize{static_cast<std::size_t>(e.integer("design.n").value_or(4))};
  ShiftedPoissonSize s;
  s.mean = e.real("design.size_mean").value_or(1.0);
  s.shift = static_cast<std::size_t>(e.integer("design.size_shift").value_or(1));
  return s;
}

BaselineScheme build_baseline(const Entries& e) {
  const bool conditional =
      e.choice("design.baseline", false, {{"none", false}, {"conditional", true}});
  if (!conditional) return NoBaselineInfection{};
  return ConditionalBaseline{e.real("design.q1").value_or(0.0), e.real("design.q0").value_or(0.0)};
}

RunConfig build(const Entries& e, std::optional<MapMode> required_mode) {
  RunConfig cfg;
  cfg.mode = e.choice("mode", required_mode.value_or(MapMode::kExactPair),
                      {{"exact-pair", MapMode::kExactPair},
                       {"ctmc", MapMode::kCtmc},
                       {"monte-carlo", MapMode::kMonteCarlo}});
  if (required_mode && cfg.mode != *required_mode) {
    throw ConfigError("mode", std::string("config selects ") + to_string(cfg.mode) +
                                  " but this command runs " + to_string(*required_mode));
  }

  const auto alpha = e.real("alpha");
  const auto omega = e.real("omega");
  if (!alpha) throw ConfigError("alpha", "required");
  if (!omega) throw ConfigError("omega", "required");
  cfg.study.params = {*alpha, *omega, 0.0, 0.0};
  cfg.study.params.validate();
  cfg.study.master_seed = e.integer("seed").value_or(0);

  cfg.study.covariates = build_covariates(e);
  cfg.study.size = build_size(e);
  cfg.study.baseline = build_baseline(e);
  cfg.max_exact_n = static_cast<std::size_t>(
      e.integer("design.max_exact_n").value_or(kDefaultMaxEnumeratedSize));
  if (cfg.max_exact_n < 1 || cfg.max_exact_n > kMaxChainSize) {
    throw ConfigError("design.max_exact_n", "must be in [1, " + std::to_string(kMaxChainSize) + "]");
  }

  const bool exponential = e.choice("observation.rule", false, {{"fixed", false}, {"exponential", true}});
  const auto t = e.real("t");
  cfg.target_incidence = e.real("target_incidence");
  if (t && cfg.target_incidence) {
    throw ConfigError("target_incidence", "give either t or target_incidence, not both");
  }
  if (exponential) {
    if (t) throw ConfigError("t", "not used with observation.rule = exponential");
    if (cfg.target_incidence) {
      throw ConfigError("target_incidence", "not used with observation.rule = exponential");
    }
    if (cfg.mode != MapMode::kMonteCarlo) {
      throw ConfigError("observation.rule", "exponential observation times need mode = monte-carlo");
    }
    cfg.study.observation = ObservationRule::exponential(e.real("observation.mean").value_or(450.0));
  } else {
    if (e.has("observation.mean")) {
      throw ConfigError("observation.mean", "only used with observation.rule = exponential");
    }
    cfg.study.observation = ObservationRule::fixed(t.value_or(450.0));
  }
  if (cfg.target_incidence &&
      !(*cfg.target_incidence > 0.0 && *cfg.target_incidence < 1.0)) {
    throw ConfigError("target_incidence", "must be in (0, 1)");
  }

  cfg.study.clusters = static_cast<std::size_t>(e.integer("study.clusters").value_or(500));
  cfg.mc.replicates = static_cast<std::size_t>(e.integer("study.replicates").value_or(200));
  if (cfg.mc.replicates < 2) throw ConfigError("study.replicates", "must be >= 2");
  if (e.boolean("study.index_case").value_or(false)) {
    IndexCaseDesign d;
    d.burn_in = e.real("study.burn_in").value_or(d.burn_in);
    d.follow_up = e.real("study.follow_up").value_or(d.follow_up);
    d.max_batches = static_cast<std::size_t>(e.integer("study.max_batches").value_or(d.max_batches));
    if (!(d.burn_in > 0.0)) throw ConfigError("study.burn_in", "must be > 0");
    if (!(d.follow_up > 0.0)) throw ConfigError("study.follow_up", "must be > 0");
    if (d.max_batches < 1) throw ConfigError("study.max_batches", "must be >= 1");
    if (cfg.mode != MapMode::kMonteCarlo) {
      throw ConfigError("study.index_case", "index-case designs need mode = monte-carlo");
    }
    cfg.mc.index_case = d;
  } else {
    for (const char* key : {"study.burn_in", "study.follow_up", "study.max_batches"}) {
      if (e.has(key)) throw ConfigError(key, "only used with study.index_case = true");
    }
  }

  cfg.mc.exclusion = e.choice("estimate.exclusion", Exclusion::kAllSubjects,
                              {{"all-subjects", Exclusion::kAllSubjects},
                               {"exclude-baseline-infected", Exclusion::kExcludeBaselineInfected},
                               {"exclude-index-only", Exclusion::kExcludeIndexOnly}});
  cfg.mc.aggregator = e.choice("estimate.aggregator", Aggregator::kMeanOfLogs,
                               {{"mean-of-logs", Aggregator::kMeanOfLogs},
                                {"log-of-mean-risks", Aggregator::kLogOfMeanRisks}});
  cfg.mc.z_threshold = e.real("estimate.z_threshold").value_or(2.0);
  if (!(cfg.mc.z_threshold > 0.0)) throw ConfigError("estimate.z_threshold", "must be > 0");
  cfg.mc.continuity_correction = e.boolean("estimate.continuity_correction").value_or(false);
  if (cfg.mc.exclusion == Exclusion::kExcludeIndexOnly && !cfg.mc.index_case) {
    throw ConfigError("estimate.exclusion", "exclude-index-only needs study.index_case = true");
  }

  cfg.mc.workers = static_cast<std::size_t>(e.integer("run.workers").value_or(0));

  GridSpec& g = cfg.grid;
  g.beta_min = e.real("grid.beta_min").value_or(g.beta_min);
  g.beta_max = e.real("grid.beta_max").value_or(g.beta_max);
  g.beta_step = e.real("grid.beta_step").value_or(g.beta_step);
  g.gamma_min = e.real("grid.gamma_min").value_or(g.gamma_min);
  g.gamma_max = e.real("grid.gamma_max").value_or(g.gamma_max);
  g.gamma_step = e.real("grid.gamma_step").value_or(g.gamma_step);
  g.validate();

  cfg.study.validate();
  return cfg;
}

}  // namespace

ExactDesign RunConfig::exact_design() const {
  ExactDesign d;
  d.covariates = study.covariates;
  d.size = study.size;
  d.baseline = study.baseline;
  d.max_cluster_size = max_exact_n;
  return d;
}

ObservationTime RunConfig::observation_time() const {
  if (target_incidence) return ObservationTime::target(*target_incidence);
  return ObservationTime::fixed(study.observation.value);
}

RunConfig parse_config_text(std::string_view text, std::optional<MapMode> required_mode) {
  std::map<std::string, std::string> values;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "missing key");
    if (!kKnownKeys.contains(key)) throw ConfigError(key, "unknown key");
    if (value.empty()) throw ConfigError(key, "missing value");
    if (!values.emplace(key, value).second) throw ConfigError(key, "duplicate key");
  }
  return build(Entries(std::move(values)), required_mode);
}

RunConfig parse_config(const std::filesystem::path& path, std::optional<MapMode> required_mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), required_mode);
}

MapResult run_configured_map(const RunConfig& config) {
  const double alpha = config.study.params.alpha;
  const double omega = config.study.params.omega;
  switch (config.mode) {
    case MapMode::kExactPair:
      return run_exact_map(config.grid, alpha, omega, config.observation_time(), config.mc.workers);
    case MapMode::kCtmc:
      return run_ctmc_map(config.grid, config.exact_design(), alpha, omega,
                          config.observation_time(), config.mc.exclusion, config.mc.workers);
    case MapMode::kMonteCarlo: break;
  }
  StudyConfig study = config.study;
  if (!config.target_incidence) return run_mc_sweep(config.grid, study, config.mc);
  const double T = calibrate_T(*config.target_incidence, alpha, omega, study.size);
  study.observation = ObservationRule::fixed(T);
  MapResult map = run_mc_sweep(config.grid, study, config.mc);
  map.settings["target_incidence"] = format_double(*config.target_incidence);
  map.fingerprint = config_fingerprint(map.settings);
  return map;
}

}  // namespace rrbias
