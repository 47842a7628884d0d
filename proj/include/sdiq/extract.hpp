#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sdiq {

/// Bit string packed LSB-first into 64-bit words; bit i is bit (i % 64) of
/// word i / 64. Padding bits past size() are kept zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n) : words_((n + 63) / 64, 0), size_(n) {}
  static BitString from_bits(std::span<const std::uint8_t> bits);
  static BitString from_string(std::string_view zeros_and_ones);

  std::size_t size() const { return size_; }
  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    words_[i >> 6] = v ? (words_[i >> 6] | mask) : (words_[i >> 6] & ~mask);
  }
  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, v);
  }
  std::size_t count() const;
  /// Bits [offset, offset + 64) as a word; bits past size() read as zero.
  std::uint64_t window(std::size_t offset) const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  /// Packed little-endian bytes, ceil(size / 8) of them.
  std::vector<std::uint8_t> to_bytes() const;
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t n);

  BitString operator^(const BitString& other) const;
  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

struct ExtractorParams {
  std::uint64_t n_in = 0;
  std::uint64_t n_out = 0;
  double epsilon_re = 1e-10;

  std::uint64_t seed_bits() const { return n_in + n_out - 1; }
};

/// floor(n_in h - 2 log2(1/eps_re)), clamped at zero.
std::uint64_t output_length(std::uint64_t n_in, double hmin_rate, double epsilon_re);

/// Parameters at the maximal output length; throws FormatError if that
/// length is zero.
ExtractorParams make_params(std::uint64_t n_in, double hmin_rate, double epsilon_re = 1e-10);

/// out_i = XOR_j T[i][j] raw[j] with T[i][j] = seed[i - j + n_in - 1],
/// evaluated one bit at a time.
BitString toeplitz_hash_naive(const BitString& raw, const BitString& seed, const ExtractorParams& p);

/// Same product, 64 columns per word operation, rows split over workers.
BitString toeplitz_hash(const BitString& raw, const BitString& seed, const ExtractorParams& p,
                        unsigned workers = 1);

/// Block-wise extraction: raw is cut into consecutive blocks of `block_in`
/// bits (the last one may be shorter) and each block gets its own matrix at
/// the maximal output length. Blocks too short for any output are dropped.
std::vector<ExtractorParams> block_plan(std::uint64_t n_in, std::uint64_t block_in, double hmin_rate,
                                        double epsilon_re = 1e-10);
std::uint64_t plan_seed_bits(std::span<const ExtractorParams> plan);
/// Hashes block k of raw with the k-th consecutive slice of seed.
BitString extract_blocks(const BitString& raw, const BitString& seed, std::span<const ExtractorParams> plan,
                         std::uint64_t block_in, unsigned workers = 1);

struct SanityReport {
  std::size_t n = 0;
  double monobit_z = 0.0;
  double monobit_p = 0.0;
  std::size_t runs = 0;
  double runs_p = 0.0;
  bool monobit_pass = false;
  bool runs_pass = false;

  bool passed() const { return monobit_pass && runs_pass; }
};

/// Frequency (monobit) and runs tests; pass at p >= 0.01. Needs 10^4 bits.
SanityReport sanity_tests(const BitString& bits);

/// `count` uniform bits from the platform entropy source.
BitString entropy_bits(std::size_t count);
/// `count` bits drawn from the seeded generator (reproducible runs).
BitString seeded_bits(std::size_t count, std::uint64_t seed);

void write_bits(const BitString& bits, const std::filesystem::path& path);
/// Reads the first n bits of a packed file; throws FormatError if short.
BitString read_bits(const std::filesystem::path& path, std::size_t n);

}  // namespace sdiq
