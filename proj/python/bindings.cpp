#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rrbias/calibration.hpp"
#include "rrbias/config.hpp"
#include "rrbias/ctmc.hpp"
#include "rrbias/errors.hpp"
#include "rrbias/exact_pair.hpp"
#include "rrbias/map_io.hpp"
#include "rrbias/sweep.hpp"

namespace py = pybind11;
using namespace rrbias;

namespace {

ClusterSizeDist size_from(std::optional<std::size_t> n, std::optional<double> size_mean,
                          std::size_t size_shift) {
  if (n && size_mean) throw ConfigError("n", "give either n or size_mean");
  if (size_mean) return ShiftedPoissonSize{*size_mean, size_shift};
  return FixedSize{n.value_or(4)};
}

CovariateScheme covariates_from(const std::string& scheme, double p, std::size_t k) {
  if (scheme == "block") return BlockCovariates{BlockRule::kExactlyK, k};
  if (scheme == "floor-half") return BlockCovariates{BlockRule::kFloorHalf, 0};
  if (scheme == "exactly-one") return BlockCovariates{BlockRule::kExactlyOne, 1};
  if (scheme == "bernoulli") return BernoulliCovariates{p};
  if (scheme == "cluster") return ClusterRandomizedCovariates{p, ClusterSplit::kCoinFlip};
  throw ConfigError("scheme", "expected block|floor-half|exactly-one|bernoulli|cluster");
}

py::list cells_to_list(const MapResult& map) {
  py::list out;
  for (const CellResult& c : map.cells) {
    py::dict d;
    d["beta"] = c.beta;
    d["gamma"] = c.gamma;
    d["mean_log_rr"] = c.mean_log_rr;
    d["se"] = c.se;
    d["replicates_used"] = c.replicates_used;
    d["replicates_dropped"] = c.replicates_dropped;
    d["classification"] = to_string(c.classification);
    d["status"] = c.status;
    out.append(d);
  }
  return out;
}

py::dict map_to_dict(const MapResult& map) {
  py::dict d;
  d["mode"] = to_string(map.mode);
  d["fingerprint"] = fingerprint_hex(map.fingerprint);
  d["master_seed"] = map.master_seed;
  d["cells"] = cells_to_list(map);
  d["csv"] = map_to_csv(map);
  return d;
}

GridSpec grid_from(py::tuple beta, py::tuple gamma) {
  GridSpec g;
  g.beta_min = beta[0].cast<double>();
  g.beta_max = beta[1].cast<double>();
  g.beta_step = beta[2].cast<double>();
  g.gamma_min = gamma[0].cast<double>();
  g.gamma_max = gamma[1].cast<double>();
  g.gamma_step = gamma[2].cast<double>();
  return g;
}

}  // namespace

PYBIND11_MODULE(_rrbias, m) {
  m.doc() = "Risk-ratio direction bias under within-cluster contagion";
  m.attr("__version__") = kToolVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SizeLimitError>(m, "SizeLimitError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<UndefinedError>(m, "UndefinedError", base.ptr());
  py::register_exception<NotApplicableError>(m, "NotApplicableError", base.ptr());
  py::register_exception<ProgressError>(m, "ProgressError", base.ptr());

  py::class_<EpidemicParams>(m, "EpidemicParams")
      .def(py::init([](double alpha, double omega, double beta, double gamma) {
             EpidemicParams p{alpha, omega, beta, gamma};
             p.validate();
             return p;
           }),
           py::arg("alpha"), py::arg("omega"), py::arg("beta") = 0.0, py::arg("gamma") = 0.0)
      .def_readwrite("alpha", &EpidemicParams::alpha)
      .def_readwrite("omega", &EpidemicParams::omega)
      .def_readwrite("beta", &EpidemicParams::beta)
      .def_readwrite("gamma", &EpidemicParams::gamma)
      .def("__repr__", [](const EpidemicParams& p) {
        return "EpidemicParams(alpha=" + format_double(p.alpha) + ", omega=" +
               format_double(p.omega) + ", beta=" + format_double(p.beta) +
               ", gamma=" + format_double(p.gamma) + ")";
      });

  m.def("hazard_ratio", &hazard_ratio, py::arg("params"));
  m.def(
      "individual_hazard",
      [](const EpidemicParams& p, int x_j, std::vector<Covariate> infected) {
        return individual_hazard(p, static_cast<Covariate>(x_j), infected);
      },
      py::arg("params"), py::arg("x_j"), py::arg("infected_covariates") = std::vector<Covariate>{});

  m.def(
      "expected_infection_probs",
      [](const EpidemicParams& p, double t) {
        const PairEvaluation e = expected_infection_probs(p, t);
        py::dict d;
        d["p_treated"] = e.p_treated;
        d["p_control"] = e.p_control;
        d["rr"] = e.rr;
        d["branch"] = to_string(e.branch);
        return d;
      },
      py::arg("params"), py::arg("t"));
  m.def("exact_risk_ratio", &exact_risk_ratio, py::arg("params"), py::arg("t"));
  m.def("risk_difference_sign", &risk_difference_sign, py::arg("params"), py::arg("t"));
  m.def("direction_bias_condition", &direction_bias_condition, py::arg("params"));
  m.def(
      "tstar_bound",
      [](const EpidemicParams& p) -> std::optional<py::dict> {
        const auto r = tstar_bound(p);
        if (!r) return std::nullopt;
        py::dict d;
        d["t_star"] = r->t_star;
        d["analytic_bound"] = r->analytic_bound;
        d["sub_case"] = std::string(r->sub_case);
        return d;
      },
      py::arg("params"));
  m.def(
      "first_infection_law",
      [](const EpidemicParams& p) {
        const FirstInfectionLaw f = first_infection_law(p);
        return py::make_tuple(f.rate, f.p_first_is_treated);
      },
      py::arg("params"));

  m.def(
      "infection_marginals",
      [](std::vector<Covariate> x, std::optional<std::vector<std::uint8_t>> y0,
         const EpidemicParams& p, double t) {
        const std::vector<std::uint8_t> start = y0.value_or(std::vector<std::uint8_t>(x.size(), 0));
        return infection_marginals(x, start, p, t);
      },
      py::arg("x"), py::arg("y0") = py::none(), py::arg("params"), py::arg("t"));
  m.def(
      "null_cumulative_incidence",
      [](double alpha, double omega, double t, std::optional<std::size_t> n,
         std::optional<double> size_mean, std::size_t size_shift) {
        return null_cumulative_incidence(size_from(n, size_mean, size_shift), alpha, omega, t);
      },
      py::arg("alpha"), py::arg("omega"), py::arg("t"), py::arg("n") = py::none(),
      py::arg("size_mean") = py::none(), py::arg("size_shift") = 1);
  m.def(
      "calibrate_T",
      [](double target, double alpha, double omega, std::optional<std::size_t> n,
         std::optional<double> size_mean, std::size_t size_shift) {
        return calibrate_T(target, alpha, omega, size_from(n, size_mean, size_shift));
      },
      py::arg("target"), py::arg("alpha"), py::arg("omega"), py::arg("n") = py::none(),
      py::arg("size_mean") = py::none(), py::arg("size_shift") = 1);
  m.def(
      "expected_rr_exact",
      [](const EpidemicParams& p, double t, const std::string& scheme, double prob,
         std::size_t k, std::optional<std::size_t> n, std::optional<double> size_mean,
         std::size_t size_shift) {
        ExactDesign d;
        d.covariates = covariates_from(scheme, prob, k);
        d.size = size_from(n, size_mean, size_shift);
        return expected_rr_exact(d, p, t);
      },
      py::arg("params"), py::arg("t"), py::arg("scheme") = "block", py::arg("p") = 0.5,
      py::arg("k") = 2, py::arg("n") = py::none(), py::arg("size_mean") = py::none(),
      py::arg("size_shift") = 1);

  m.def("classify_direction",
        [](double beta, double mean_log_rr, double se, double z) {
          return std::string(to_string(classify_direction(beta, mean_log_rr, se, z)));
        },
        py::arg("beta"), py::arg("mean_log_rr"), py::arg("se"), py::arg("z_threshold") = 2.0);

  m.def(
      "simulate_arm_counts",
      [](const EpidemicParams& p, double t, std::size_t clusters, std::uint64_t seed,
         const std::string& scheme, double prob, std::size_t k, std::optional<std::size_t> n,
         std::optional<double> size_mean, std::size_t size_shift) {
        StudyConfig cfg;
        cfg.params = p;
        cfg.covariates = covariates_from(scheme, prob, k);
        cfg.size = size_from(n, size_mean, size_shift);
        cfg.observation = ObservationRule::fixed(t);
        cfg.clusters = clusters;
        cfg.master_seed = seed;
        const ArmCounts c = pool_counts(simulate_study(cfg), Exclusion::kAllSubjects);
        py::dict d;
        d["infected1"] = c.infected1;
        d["total1"] = c.total1;
        d["infected0"] = c.infected0;
        d["total0"] = c.total0;
        return d;
      },
      py::arg("params"), py::arg("t"), py::arg("clusters") = 500, py::arg("seed") = 0,
      py::arg("scheme") = "block", py::arg("p") = 0.5, py::arg("k") = 2,
      py::arg("n") = py::none(), py::arg("size_mean") = py::none(), py::arg("size_shift") = 1);

  m.def(
      "run_exact_map",
      [](double alpha, double omega, py::tuple beta, py::tuple gamma, std::optional<double> t,
         std::optional<double> target, std::size_t workers) {
        if (t.has_value() == target.has_value()) throw ConfigError("t", "give exactly one of t, target");
        const ObservationTime time = t ? ObservationTime::fixed(*t) : ObservationTime::target(*target);
        const GridSpec grid = grid_from(beta, gamma);
        MapResult map;
        {
          py::gil_scoped_release release;
          map = run_exact_map(grid, alpha, omega, time, workers);
        }
        return map_to_dict(map);
      },
      py::arg("alpha"), py::arg("omega"), py::arg("beta") = py::make_tuple(-3.0, 3.0, 0.25),
      py::arg("gamma") = py::make_tuple(-3.0, 3.0, 0.25), py::arg("t") = py::none(),
      py::arg("target") = py::none(), py::arg("workers") = 0);

  m.def(
      "run_config",
      [](const std::string& text, std::optional<std::uint64_t> seed) {
        RunConfig cfg = parse_config_text(text);
        if (seed) cfg.study.master_seed = *seed;
        MapResult map;
        {
          py::gil_scoped_release release;
          map = run_configured_map(cfg);
        }
        return map_to_dict(map);
      },
      py::arg("config_text"), py::arg("seed") = py::none());
}
