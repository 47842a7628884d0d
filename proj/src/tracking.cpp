#include "sdiq/tracking.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "sdiq/errors.hpp"
#include "sdiq/parallel.hpp"

namespace sdiq {

Eigen::Matrix2d ConditionalCounts::probabilities() const {
  Eigen::Matrix2d p;
  for (int x = 0; x < 2; ++x) {
    const std::uint64_t nx = n_x(x);
    if (nx == 0) throw FormatError("no rounds recorded for input x = " + std::to_string(x));
    for (int b = 0; b < 2; ++b) p(b, x) = static_cast<double>(n_bx(b, x)) / static_cast<double>(nx);
  }
  return p;
}

std::optional<ChunkSummary> summarize_chunk(std::span<const TrialRecord> records,
                                            std::uint64_t chunk_index) {
  std::complex<double> sum[2] = {};
  std::uint64_t count[2] = {};
  for (const TrialRecord& r : records) {
    sum[r.x] += r.point.value();
    ++count[r.x];
  }
  if (count[0] == 0 || count[1] == 0) return std::nullopt;
  const std::complex<double> c0 = sum[0] / static_cast<double>(count[0]);
  const std::complex<double> c1 = sum[1] / static_cast<double>(count[1]);
  if (c0 == c1) return std::nullopt;

  ChunkSummary s;
  s.chunk_index = chunk_index;
  s.c0 = PhasePoint::from(c0);
  s.c1 = PhasePoint::from(c1);
  s.phi_hat = std::arg((c0 - c1) / 2.0);
  s.n_in_chunk = records.size();
  return s;
}

std::vector<ChunkSummary> unwrap_phases(std::vector<ChunkSummary> summaries) {
  constexpr double two_pi = 2 * std::numbers::pi;
  for (std::size_t k = 1; k < summaries.size(); ++k) {
    const double d = summaries[k].phi_hat - summaries[k - 1].phi_hat;
    summaries[k].phi_hat += two_pi * std::floor((std::numbers::pi - d) / two_pi);
  }
  return summaries;
}

void classify(std::span<TrialRecord> records, const ChunkSummary& summary) {
  const std::complex<double> c0 = summary.c0.value();
  const std::complex<double> c1 = summary.c1.value();
  const std::complex<double> axis = c0 - c1;
  if (axis == 0.0) throw UsageError("classify: degenerate chunk summary (c0 == c1)");
  const std::complex<double> mid = (c0 + c1) / 2.0;
  for (TrialRecord& r : records) {
    const std::complex<double> d = r.point.value() - mid;
    const double inner = d.real() * axis.real() + d.imag() * axis.imag();
    r.b = inner >= 0 ? 0 : 1;
  }
}

void classify_fixed_axis(std::span<TrialRecord> records, double axis) {
  const double ca = std::cos(axis), sa = std::sin(axis);
  for (TrialRecord& r : records) r.b = (r.point.re * ca + r.point.im * sa) >= 0 ? 0 : 1;
}

ConditionalCounts accumulate(std::span<const TrialRecord> records) {
  ConditionalCounts counts;
  for (const TrialRecord& r : records) {
    if (!r.classified()) throw UsageError("accumulate: unclassified record " + std::to_string(r.index));
    ++counts.n_bx(r.b, r.x);
  }
  return counts;
}

TrackReport track(std::span<TrialRecord> records, const TrackOptions& options) {
  if (options.chunk_size == 0) throw UsageError("chunk size must be >= 1");
  const std::size_t n = records.size();
  const std::size_t chunks = (n + options.chunk_size - 1) / options.chunk_size;

  std::vector<std::optional<ChunkSummary>> raw(chunks);
  std::vector<ConditionalCounts> partial(chunks);
  parallel_for(chunks, options.workers, [&](std::size_t k) {
    const std::size_t begin = k * options.chunk_size;
    auto chunk = records.subspan(begin, std::min(options.chunk_size, n - begin));
    raw[k] = summarize_chunk(chunk, k);
    if (raw[k]) {
      classify(chunk, *raw[k]);
      partial[k] = accumulate(chunk);
    } else {
      for (TrialRecord& r : chunk) r.b = kUnassigned;
    }
  });

  TrackReport report;
  report.chunks_total = chunks;
  for (std::size_t k = 0; k < chunks; ++k) {
    if (raw[k]) {
      report.summaries.push_back(*raw[k]);
      report.counts += partial[k];
    } else {
      ++report.chunks_unusable;
      report.records_excluded += std::min(options.chunk_size, n - k * options.chunk_size);
    }
  }
  report.summaries = unwrap_phases(std::move(report.summaries));
  return report;
}

void write_chunk_csv(std::span<const ChunkSummary> summaries, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw FormatError("cannot open csv for writing: " + path.string());
  std::fputs("chunk,phi_hat_rad,c0_re,c0_im,c1_re,c1_im,n\n", f);
  for (const ChunkSummary& s : summaries)
    std::fprintf(f, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n",
                 static_cast<unsigned long long>(s.chunk_index), s.phi_hat, s.c0.re, s.c0.im, s.c1.re,
                 s.c1.im, static_cast<unsigned long long>(s.n_in_chunk));
  if (std::fclose(f) != 0) throw FormatError("write failed: " + path.string());
}

}  // namespace sdiq
