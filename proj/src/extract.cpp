#include "sdiq/extract.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "sdiq/errors.hpp"
#include "sdiq/parallel.hpp"
#include "sdiq/rng.hpp"

namespace sdiq {

BitString BitString::from_bits(std::span<const std::uint8_t> bits) {
  BitString out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw UsageError("BitString: bit values must be 0 or 1");
    out.set(i, bits[i] != 0);
  }
  return out;
}

BitString BitString::from_string(std::string_view s) {
  BitString out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw UsageError("BitString: expected only '0' and '1'");
    out.set(i, s[i] == '1');
  }
  return out;
}

std::size_t BitString::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

std::uint64_t BitString::window(std::size_t offset) const {
  const std::size_t q = offset >> 6, s = offset & 63;
  const std::uint64_t lo = q < words_.size() ? words_[q] : 0;
  if (s == 0) return lo;
  const std::uint64_t hi = q + 1 < words_.size() ? words_[q + 1] : 0;
  return (lo >> s) | (hi << (64 - s));
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t n) {
  if (bytes.size() * 8 < n) throw FormatError("BitString: not enough bytes for the requested length");
  BitString out(n);
  for (std::size_t i = 0; i < (n + 7) / 8; ++i) out.words_[i / 8] |= std::uint64_t{bytes[i]} << (8 * (i % 8));
  if (n & 63) out.words_.back() &= (std::uint64_t{1} << (n & 63)) - 1;
  return out;
}

BitString BitString::operator^(const BitString& other) const {
  if (size_ != other.size_) throw UsageError("BitString: xor of different lengths");
  BitString out = *this;
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] ^= other.words_[i];
  return out;
}

std::uint64_t output_length(std::uint64_t n_in, double hmin_rate, double epsilon_re) {
  if (n_in < 1) throw UsageError("output_length: need at least one input bit");
  if (!(hmin_rate >= 0 && hmin_rate <= 1)) throw UsageError("output_length: rate must lie in [0, 1]");
  if (!(epsilon_re > 0 && epsilon_re < 1)) throw UsageError("output_length: epsilon must lie in (0, 1)");
  const double len = std::floor(static_cast<double>(n_in) * hmin_rate - 2.0 * std::log2(1.0 / epsilon_re));
  return len > 0 ? static_cast<std::uint64_t>(len) : 0;
}

ExtractorParams make_params(std::uint64_t n_in, double hmin_rate, double epsilon_re) {
  const auto n_out = output_length(n_in, hmin_rate, epsilon_re);
  if (n_out < 1) throw FormatError("extract: too few input bits for any output at this rate and epsilon");
  return {n_in, n_out, epsilon_re};
}

namespace {

void check_lengths(const BitString& raw, const BitString& seed, const ExtractorParams& p) {
  if (p.n_in < 1 || p.n_out < 1) throw UsageError("toeplitz: matrix dimensions must be positive");
  if (raw.size() != p.n_in) throw UsageError("toeplitz: raw length does not match n_in");
  if (seed.size() != p.seed_bits()) throw UsageError("toeplitz: seed length must be n_in + n_out - 1");
}

}  // namespace

BitString toeplitz_hash_naive(const BitString& raw, const BitString& seed, const ExtractorParams& p) {
  check_lengths(raw, seed, p);
  BitString out(p.n_out);
  for (std::size_t i = 0; i < p.n_out; ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < p.n_in; ++j) acc ^= seed.get(i - j + p.n_in - 1) && raw.get(j);
    out.set(i, acc);
  }
  return out;
}

BitString toeplitz_hash(const BitString& raw, const BitString& seed, const ExtractorParams& p, unsigned workers) {
  check_lengths(raw, seed, p);
  // With the seed reversed, row i of T is the contiguous slice starting at
  // n_out - 1 - i, so each row is a word-wise AND against raw.
  const std::size_t len = seed.size();
  BitString reversed(len);
  for (std::size_t k = 0; k < len; ++k) reversed.set(k, seed.get(len - 1 - k));

  const auto& raw_words = raw.words();
  std::vector<std::uint64_t> out_words((p.n_out + 63) / 64, 0);
  parallel_for(out_words.size(), workers, [&](std::size_t w) {
    std::uint64_t word = 0;
    const std::size_t end = std::min<std::size_t>(64 * (w + 1), p.n_out);
    for (std::size_t i = 64 * w; i < end; ++i) {
      const std::size_t offset = p.n_out - 1 - i;
      std::uint64_t acc = 0;
      for (std::size_t k = 0; k < raw_words.size(); ++k) acc ^= raw_words[k] & reversed.window(offset + 64 * k);
      word |= std::uint64_t(std::popcount(acc) & 1) << (i & 63);
    }
    out_words[w] = word;
  });

  BitString out(p.n_out);
  for (std::size_t i = 0; i < p.n_out; ++i) out.set(i, (out_words[i >> 6] >> (i & 63)) & 1u);
  return out;
}

std::vector<ExtractorParams> block_plan(std::uint64_t n_in, std::uint64_t block_in, double hmin_rate,
                                        double epsilon_re) {
  if (block_in < 1) throw UsageError("block_plan: block size must be >= 1");
  std::vector<ExtractorParams> plan;
  for (std::uint64_t start = 0; start < n_in; start += block_in) {
    const std::uint64_t len = std::min(block_in, n_in - start);
    const auto n_out = output_length(len, hmin_rate, epsilon_re);
    if (n_out > 0) plan.push_back({len, n_out, epsilon_re});
  }
  return plan;
}

std::uint64_t plan_seed_bits(std::span<const ExtractorParams> plan) {
  std::uint64_t total = 0;
  for (const auto& p : plan) total += p.seed_bits();
  return total;
}

namespace {

BitString slice(const BitString& bits, std::size_t start, std::size_t len) {
  BitString out(len);
  for (std::size_t i = 0; i < len; ++i) out.set(i, bits.get(start + i));
  return out;
}

}  // namespace

BitString extract_blocks(const BitString& raw, const BitString& seed, std::span<const ExtractorParams> plan,
                         std::uint64_t block_in, unsigned workers) {
  if (seed.size() < plan_seed_bits(plan)) throw UsageError("extract_blocks: seed shorter than the plan needs");
  BitString out;
  std::size_t seed_pos = 0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto& p = plan[k];
    if (p.n_in != block_in && k + 1 != plan.size()) throw UsageError("extract_blocks: only the last block may be short");
    if (k * block_in + p.n_in > raw.size()) throw UsageError("extract_blocks: raw shorter than the plan needs");
    const auto bits = toeplitz_hash(slice(raw, k * block_in, p.n_in), slice(seed, seed_pos, p.seed_bits()), p, workers);
    seed_pos += p.seed_bits();
    for (std::size_t i = 0; i < bits.size(); ++i) out.push_back(bits.get(i));
  }
  return out;
}

SanityReport sanity_tests(const BitString& bits) {
  const std::size_t n = bits.size();
  if (n < 10000) throw UsageError("sanity_tests: need at least 10^4 bits");
  SanityReport r;
  r.n = n;
  const double nd = static_cast<double>(n);
  const double ones = static_cast<double>(bits.count());
  const double s = 2.0 * ones - nd;
  r.monobit_z = s / std::sqrt(nd);
  r.monobit_p = std::erfc(std::abs(s) / std::sqrt(2.0 * nd));

  r.runs = 1;
  for (std::size_t i = 1; i < n; ++i) r.runs += bits.get(i) != bits.get(i - 1);
  const double pi = ones / nd;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
    r.runs_p = 0.0;  // frequency prerequisite of the runs test fails
  } else {
    const double v = static_cast<double>(r.runs);
    r.runs_p = std::erfc(std::abs(v - 2.0 * nd * pi * (1.0 - pi)) / (2.0 * std::sqrt(2.0 * nd) * pi * (1.0 - pi)));
  }
  r.monobit_pass = r.monobit_p >= 0.01;
  r.runs_pass = r.runs_p >= 0.01;
  return r;
}

BitString entropy_bits(std::size_t count) {
  std::random_device rd;
  BitString out(count);
  for (std::size_t i = 0; i < count; i += 32) {
    const auto v = rd();
    for (std::size_t k = 0; k < 32 && i + k < count; ++k) out.set(i + k, (v >> k) & 1u);
  }
  return out;
}

BitString seeded_bits(std::size_t count, std::uint64_t seed) {
  auto eng = make_engine(seed, Stream::extractor_seed);
  BitString out(count);
  for (std::size_t i = 0; i < count; i += 64) {
    const auto v = eng();
    for (std::size_t k = 0; k < 64 && i + k < count; ++k) out.set(i + k, (v >> k) & 1u);
  }
  return out;
}

void write_bits(const BitString& bits, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  const auto bytes = bits.to_bytes();
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("write failed: " + path.string());
}

BitString read_bits(const std::filesystem::path& path, std::size_t n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open for reading: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() * 8 < n) throw FormatError("bit file too short: " + path.string());
  return BitString::from_bytes(bytes, n);
}

}  // namespace sdiq
