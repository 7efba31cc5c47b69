#include "rrbias/calibration.hpp"

#include <cmath>

#include "rrbias/ctmc.hpp"
#include "rrbias/errors.hpp"

namespace rrbias {

double calibrate_T(double target, double alpha, double omega, const ClusterSizeDist& size,
                   double tolerance) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ConfigError("target_incidence", "must be in (0, 1)");
  }
  EpidemicParams{alpha, omega, 0.0, 0.0}.validate();
  validate(size);
  if (alpha == 0.0) {
    throw NotApplicableError("target incidence is unreachable with alpha = 0 and no baseline "
                             "infections");
  }

  const double upper = -std::log1p(-target) / alpha;
  if (omega == 0.0) return upper;

  auto incidence = [&](double t) { return null_cumulative_incidence(size, alpha, omega, t); };
  double lo = 0.0, hi = upper;
  // Stop on the incidence residual, with a guard on the bracket width.
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = incidence(mid) - target;
    if (std::fabs(f) <= 0.1 * tolerance || hi - lo <= 1e-12 * upper) return mid;
    (f < 0.0 ? lo : hi) = mid;
  }
  throw NumericalError("calibration bisection did not converge");
}

}  // namespace rrbias
