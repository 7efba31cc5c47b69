#pragma once

#include "rrbias/designs.hpp"

namespace rrbias {

inline constexpr double kCalibrationTolerance = 1e-6;

/// Observation time at which the subject-weighted null cumulative incidence
/// equals `target`, by bisection on [0, -log(1 - target) / alpha] (the
/// no-contagion time bounds it from above).
/// Throws ConfigError for target outside (0, 1) and NotApplicableError when
/// alpha == 0, since the target is then unreachable.
double calibrate_T(double target, double alpha, double omega, const ClusterSizeDist& size,
                   double tolerance = kCalibrationTolerance);

}  // namespace rrbias
