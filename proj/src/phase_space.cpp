#include "sdiq/phase_space.hpp"

#include <cmath>

#include "sdiq/parallel.hpp"
#include "sdiq/rng.hpp"

namespace sdiq {
namespace {

void validate(const StatePrep& prep, const DetectorModel& det, DetectorKind expected,
              std::size_t n) {
  if (det.kind != expected) throw UsageError("detector kind does not match sampler");
  if (n == 0) throw UsageError("sample count must be >= 1");
  if (!std::isfinite(prep.mu) || !std::isfinite(prep.phi) || !std::isfinite(det.theta) ||
      !std::isfinite(det.eta))
    throw UsageError("non-finite state or detector parameter");
  if (prep.mu < 0) throw UsageError("mean photon number must be >= 0");
  if (prep.x != 0 && prep.x != 1) throw UsageError("input bit must be 0 or 1");
  if (!(det.eta > 0 && det.eta <= 1)) throw UsageError("efficiency must lie in (0, 1]");
}

template <typename T, typename Draw>
std::vector<T> sample_blocks(std::uint64_t seed, Stream stream, std::size_t n, unsigned workers,
                             Draw draw) {
  std::vector<T> out(n);
  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  parallel_for(blocks, workers, [&](std::size_t k) {
    Engine eng = make_engine(seed, stream, k);
    const std::size_t end = std::min(n, (k + 1) * kSampleBlock);
    for (std::size_t i = k * kSampleBlock; i < end; ++i) out[i] = draw(eng);
  });
  return out;
}

}  // namespace

std::complex<double> heterodyne_mean(const StatePrep& prep, double eta) {
  return std::sqrt(eta) * prep.amplitude();
}

std::vector<PhasePoint> sample_heterodyne(const StatePrep& prep, const DetectorModel& det,
                                          std::uint64_t rng_seed, std::size_t n,
                                          unsigned workers) {
  validate(prep, det, DetectorKind::heterodyne, n);
  const std::complex<double> mean = heterodyne_mean(prep, det.eta);
  return sample_blocks<PhasePoint>(rng_seed, Stream::noise, n, workers,
                                   [mean](Engine& eng) { return heterodyne_draw(mean, eng); });
}

std::vector<double> sample_homodyne(const StatePrep& prep, const DetectorModel& det,
                                    std::uint64_t rng_seed, std::size_t n, unsigned workers) {
  validate(prep, det, DetectorKind::homodyne, n);
  const double mean =
      std::sqrt(det.eta) * (prep.amplitude() * std::polar(1.0, -det.theta)).real();
  return sample_blocks<double>(rng_seed, Stream::homodyne, n, workers, [mean](Engine& eng) {
    std::normal_distribution<double> noise(0.0, 0.5);
    return mean + noise(eng);
  });
}

}  // namespace sdiq
