#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sdiq/acquisition.hpp"

namespace sdiq {

/// Centroids and phase estimate of one chunk of rounds.
struct ChunkSummary {
  std::uint64_t chunk_index = 0;
  PhasePoint c0{};
  PhasePoint c1{};
  double phi_hat = 0.0;  // phase of the x = 0 lobe, unwrapped across chunks
  std::uint64_t n_in_chunk = 0;
};

/// Outcome counts n_bx indexed (b, x).
struct ConditionalCounts {
  Eigen::Matrix<std::uint64_t, 2, 2> n_bx = Eigen::Matrix<std::uint64_t, 2, 2>::Zero();

  std::uint64_t n_x(int x) const { return n_bx(0, x) + n_bx(1, x); }
  std::uint64_t total() const { return n_x(0) + n_x(1); }
  /// p~(b|x) = n_bx / n_x.
  Eigen::Matrix2d probabilities() const;

  ConditionalCounts& operator+=(const ConditionalCounts& other) {
    n_bx += other.n_bx;
    return *this;
  }
  friend bool operator==(const ConditionalCounts& a, const ConditionalCounts& b) {
    return a.n_bx == b.n_bx;
  }
};

/// Centroids of each input population and the lobe phase. Returns nullopt
/// when the chunk is unusable: an input class is missing or the centroids
/// coincide.
std::optional<ChunkSummary> summarize_chunk(std::span<const TrialRecord> records,
                                            std::uint64_t chunk_index);

/// Shifts each phi_hat by multiples of 2 pi so that neighbouring differences
/// fall in (-pi, pi].
std::vector<ChunkSummary> unwrap_phases(std::vector<ChunkSummary> summaries);

/// Perpendicular-bisector classifier: b = 0 iff <beta - (c0+c1)/2, c0 - c1> >= 0.
void classify(std::span<TrialRecord> records, const ChunkSummary& summary);

/// Ablation classifier without tracking: b = 0 iff the projection of beta on
/// the fixed axis at angle `axis` is >= 0.
void classify_fixed_axis(std::span<TrialRecord> records, double axis);

ConditionalCounts accumulate(std::span<const TrialRecord> records);

struct TrackOptions {
  std::size_t chunk_size = 1000;
  unsigned workers = 1;
};

struct TrackReport {
  std::vector<ChunkSummary> summaries;  // usable chunks, unwrapped
  ConditionalCounts counts;
  std::uint64_t chunks_total = 0;
  std::uint64_t chunks_unusable = 0;
  std::uint64_t records_excluded = 0;
};

/// Chunk, summarise, classify and count. Records of unusable chunks keep
/// b = unassigned and are left out of the counts.
TrackReport track(std::span<TrialRecord> records, const TrackOptions& options = {});

/// Chunk summary CSV: `chunk,phi_hat_rad,c0_re,c0_im,c1_re,c1_im,n`.
void write_chunk_csv(std::span<const ChunkSummary> summaries, const std::filesystem::path& path);

}  // namespace sdiq
