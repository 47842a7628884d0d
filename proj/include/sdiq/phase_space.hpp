#pragma once

// Coherent-state model and the closed-form statistics of heterodyne and
// homodyne detection.
//
// Quadrature convention: outcomes live in the alpha-plane. A heterodyne
// outcome for |alpha> is distributed as the Husimi Q function, an isotropic
// Gaussian centred at alpha with variance 1/2 per component. A homodyne
// outcome along axis theta is Gaussian with mean Re(alpha e^{-i theta}) and
// variance 1/4 (vacuum noise). These are the only normalisations for which
// the sign-of-quadrature error rates come out as 1/2 (1 -+ erf(|alpha|)) and
// 1/2 (1 -+ erf(sqrt(2) |alpha cos theta|)) respectively.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sdiq/errors.hpp"
#include "sdiq/rng.hpp"

namespace sdiq {

/// One heterodyne outcome (X, P) in alpha-plane units.
struct PhasePoint {
  double re = 0.0;
  double im = 0.0;

  std::complex<double> value() const { return {re, im}; }
  static PhasePoint from(std::complex<double> z) { return {z.real(), z.imag()}; }
  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

/// Coherent-state preparation |(-1)^x alpha>, alpha = sqrt(mu) e^{i phi}.
/// mu > 0.5 is representable; certification refuses it.
struct StatePrep {
  double mu = 0.0;
  double phi = 0.0;
  int x = 0;

  std::complex<double> amplitude() const {
    return std::polar(std::sqrt(mu), phi) * (x == 0 ? 1.0 : -1.0);
  }
};

enum class DetectorKind { heterodyne, homodyne };

struct DetectorModel {
  double eta = 1.0;
  DetectorKind kind = DetectorKind::heterodyne;
  double theta = 0.0;  // homodyne axis; ignored for heterodyne
};

/// 2x2 table of conditional probabilities indexed (b, x).
template <typename Scalar>
using CondProb = Eigen::Matrix<Scalar, 2, 2>;

namespace detail {
template <typename Scalar>
CondProb<Scalar> symmetric_table(Scalar erf_value) {
  const Scalar hit = Scalar(0.5) * (Scalar(1) + erf_value);
  const Scalar miss = Scalar(0.5) * (Scalar(1) - erf_value);
  CondProb<Scalar> p;
  p << hit, miss,
       miss, hit;
  return p;
}
}  // namespace detail

/// Sign-of-projection error rates for heterodyne detection of |+-alpha>.
template <typename Scalar>
CondProb<Scalar> prob_heterodyne(Scalar alpha_mag) {
  using std::erf;
  if (!(alpha_mag >= Scalar(0))) throw UsageError("prob_heterodyne: alpha_mag must be >= 0");
  return detail::symmetric_table<Scalar>(erf(alpha_mag));
}

/// Homodyne error rates along an axis at angle theta from the state axis.
template <typename Scalar>
CondProb<Scalar> prob_homodyne(Scalar alpha_mag, Scalar theta) {
  using std::abs, std::cos, std::erf, std::sqrt;
  if (!(alpha_mag >= Scalar(0))) throw UsageError("prob_homodyne: alpha_mag must be >= 0");
  return detail::symmetric_table<Scalar>(erf(sqrt(Scalar(2)) * abs(alpha_mag * cos(theta))));
}

/// Lower bound on p(1|0) + p(0|1) for any pair of states with mean photon
/// number at most mu: 1 - 2 sqrt(mu - mu^2).
template <typename Scalar>
Scalar discrimination_bound(Scalar mu) {
  using std::sqrt;
  if (!(mu >= Scalar(0) && mu <= Scalar(0.5)))
    throw AssumptionViolation("discrimination_bound: mu must lie in [0, 0.5]");
  return Scalar(1) - Scalar(2) * sqrt(mu - mu * mu);
}

/// Overlap lower bound 1 - 2 mu implied by the energy bound (mu <= 0.5).
template <typename Scalar>
Scalar overlap_from_energy(Scalar mu) {
  if (!(mu >= Scalar(0) && mu <= Scalar(0.5)))
    throw AssumptionViolation("overlap_from_energy: mu must lie in [0, 0.5]");
  return Scalar(1) - Scalar(2) * mu;
}

/// Draws n heterodyne outcomes for a fixed preparation. Deterministic in
/// rng_seed and independent of `workers`.
std::vector<PhasePoint> sample_heterodyne(const StatePrep& prep, const DetectorModel& det,
                                          std::uint64_t rng_seed, std::size_t n,
                                          unsigned workers = 1);

/// Draws n homodyne quadrature values along det.theta.
std::vector<double> sample_homodyne(const StatePrep& prep, const DetectorModel& det,
                                    std::uint64_t rng_seed, std::size_t n, unsigned workers = 1);

/// Mean of a heterodyne outcome after loss: sqrt(eta) * alpha.
std::complex<double> heterodyne_mean(const StatePrep& prep, double eta);

/// Single heterodyne draw around `mean`; the kernel shared by the samplers and
/// the run simulator.
inline PhasePoint heterodyne_draw(std::complex<double> mean, Engine& eng) {
  std::normal_distribution<double> noise(0.0, 0.70710678118654752440);
  const double re = mean.real() + noise(eng);
  const double im = mean.imag() + noise(eng);
  return {re, im};
}

}  // namespace sdiq
