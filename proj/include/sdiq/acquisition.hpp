#pragma once

#include <cstdint>
#include <vector>

#include "sdiq/phase_space.hpp"

namespace sdiq {

/// Signal/LO relative phase model: phi(t) = phi0 + rate * t + diffusion * W(t).
struct DriftModel {
  double rate = 0.0;       // rad/s
  double diffusion = 0.0;  // rad/sqrt(s)
  double phi0 = 0.0;       // rad
};

/// 32 deg/s expressed in rad/s.
inline constexpr double kReferenceDriftRate = 32.0 * 3.14159265358979323846 / 180.0;

struct RunConfig {
  double mu = 0.2;
  double eta = 1.0;
  double rep_rate = 1.25e9;
  std::uint64_t n_rounds = 1'000'000;
  DriftModel drift{};
  std::uint64_t rng_seed = 0;
  unsigned workers = 1;

  void validate() const;
};

inline constexpr std::uint8_t kUnassigned = 255;

struct TrialRecord {
  std::uint64_t index = 0;
  PhasePoint point{};
  std::uint8_t x = 0;
  std::uint8_t b = kUnassigned;

  bool classified() const { return b != kUnassigned; }
  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// i.i.d. uniform input bits from the `inputs` stream of rng_seed.
std::vector<std::uint8_t> generate_inputs(std::size_t n, std::uint64_t rng_seed);

/// Relative phase of every round. Deterministic drift is evaluated in closed
/// form; a non-zero diffusion is integrated sequentially from its own stream.
std::vector<double> phase_trajectory(const RunConfig& cfg);

/// Full experiment stream with outcomes left unassigned.
std::vector<TrialRecord> simulate_run(const RunConfig& cfg);

}  // namespace sdiq
