#pragma once

#include <cstdint>
#include <span>

#include "sdiq/certify.hpp"

namespace sdiq {

/// Counts observed at one probe amplitude |alpha|.
struct EfficiencySample {
  double alpha_mag = 0.0;
  ProbTable table;  // n_x required
};

struct EfficiencyFit {
  double eta = 0.0;
  double sigma = 0.0;  // 1 sigma from the curvature of the log-likelihood
  double log_likelihood = 0.0;
};

/// Binomial maximum-likelihood fit of the detector efficiency under the
/// honest model p(0|0) = p(1|1) = (1 + erf(sqrt(eta) |alpha|)) / 2, eta in (0, 1].
/// Throws UsageError with fewer than two distinct amplitudes or missing
/// counts, and FormatError when the counts carry no information on eta.
EfficiencyFit fit_efficiency(std::span<const EfficiencySample> samples);

/// Binomially sampled table at the honest model, n_per_x rounds per input.
ProbTable synthetic_table(double alpha_mag, double eta, std::uint64_t n_per_x, std::uint64_t seed);

}  // namespace sdiq
