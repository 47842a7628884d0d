#pragma once

#include <optional>

#include "sdiq/certify.hpp"

namespace sdiq {

/// Brute-force lower bound on the guessing probability, independent of the
/// SDP route. Each of the four guess labels may use either trivial
/// measurement or a real projective measurement at any angle on a grid of
/// step `angle_step` radians; the best mixture reproducing pt is found by
/// linear programming over all (label, measurement) pairs. Returns nullopt
/// when no mixture on the grid reproduces pt to within `tolerance` (summed
/// absolute deviation of p(0|0) and p(0|1)).
std::optional<double> oracle_pg(const ProbTable& pt, const OverlapConstraint& oc, double angle_step = 1e-2,
                                double tolerance = 1e-3);

}  // namespace sdiq
