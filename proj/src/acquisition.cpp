#include "sdiq/acquisition.hpp"

#include <cmath>

#include "sdiq/parallel.hpp"
#include "sdiq/rng.hpp"

namespace sdiq {

void RunConfig::validate() const {
  if (!(rep_rate > 0) || !std::isfinite(rep_rate)) throw UsageError("rep_rate must be > 0");
  if (n_rounds < 1) throw UsageError("n_rounds must be >= 1");
  if (!(mu >= 0) || !std::isfinite(mu)) throw UsageError("mu must be a finite value >= 0");
  if (!(eta > 0 && eta <= 1)) throw UsageError("eta must lie in (0, 1]");
  if (!(drift.diffusion >= 0)) throw UsageError("drift diffusion must be >= 0");
  if (!std::isfinite(drift.rate) || !std::isfinite(drift.phi0) || !std::isfinite(drift.diffusion))
    throw UsageError("non-finite drift parameter");
}

std::vector<std::uint8_t> generate_inputs(std::size_t n, std::uint64_t rng_seed) {
  if (n == 0) throw UsageError("generate_inputs: n must be >= 1");
  std::vector<std::uint8_t> bits(n);
  Engine eng = make_engine(rng_seed, Stream::inputs);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = eng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

std::vector<double> phase_trajectory(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_rounds;
  std::vector<double> phase(n);
  const double dt = 1.0 / cfg.rep_rate;
  for (std::size_t t = 0; t < n; ++t)
    phase[t] = cfg.drift.phi0 + cfg.drift.rate * static_cast<double>(t) * dt;
  if (cfg.drift.diffusion > 0) {
    Engine eng = make_engine(cfg.rng_seed, Stream::drift);
    std::normal_distribution<double> step(0.0, cfg.drift.diffusion * std::sqrt(dt));
    double wiener = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      wiener += step(eng);
      phase[t] += wiener;
    }
  }
  return phase;
}

std::vector<TrialRecord> simulate_run(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_rounds;
  const std::vector<std::uint8_t> inputs = generate_inputs(n, cfg.rng_seed);
  const std::vector<double> phase = phase_trajectory(cfg);
  const double amplitude = std::sqrt(cfg.eta * cfg.mu);

  std::vector<TrialRecord> records(n);
  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  parallel_for(blocks, cfg.workers, [&](std::size_t k) {
    Engine eng = make_engine(cfg.rng_seed, Stream::noise, k);
    const std::size_t end = std::min(n, (k + 1) * kSampleBlock);
    for (std::size_t t = k * kSampleBlock; t < end; ++t) {
      const double sign = inputs[t] == 0 ? 1.0 : -1.0;
      const std::complex<double> mean = sign * std::polar(amplitude, phase[t]);
      records[t] = TrialRecord{t, heterodyne_draw(mean, eng), inputs[t], kUnassigned};
    }
  });
  return records;
}

}  // namespace sdiq
