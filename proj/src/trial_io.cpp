#include "sdiq/trial_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sdiq/errors.hpp"

namespace sdiq {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'D', 'I', 'Q'};

template <typename T>
void put_le(unsigned char* out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

template <typename T>
T get_le(const unsigned char* in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_trials(std::span<const TrialRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open trial file for writing: " + path.string());

  const bool classified =
      !records.empty() &&
      std::all_of(records.begin(), records.end(), [](const TrialRecord& r) { return r.classified(); });
  std::array<unsigned char, kTrialHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(header.data() + 4, kTrialFileVersion);
  put_le<std::uint16_t>(header.data() + 6, classified ? kFlagClassified : 0);
  put_le<std::uint64_t>(header.data() + 8, records.size());
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  constexpr std::size_t kBatch = 1 << 14;
  std::vector<unsigned char> buffer(kBatch * kTrialRecordBytes);
  for (std::size_t start = 0; start < records.size(); start += kBatch) {
    const std::size_t count = std::min(kBatch, records.size() - start);
    for (std::size_t i = 0; i < count; ++i) {
      const TrialRecord& r = records[start + i];
      unsigned char* p = buffer.data() + i * kTrialRecordBytes;
      put_le<std::uint64_t>(p, r.index);
      p[8] = r.x;
      p[9] = r.b;
      put_le<double>(p + 10, r.point.re);
      put_le<double>(p + 18, r.point.im);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(count * kTrialRecordBytes));
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open trial file: " + path.string());

  std::array<unsigned char, kTrialHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size()))
    throw FormatError("truncated trial file header: " + path.string());
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("bad magic in trial file: " + path.string());
  const auto version = get_le<std::uint16_t>(header.data() + 4);
  if (version != kTrialFileVersion)
    throw FormatError("unsupported trial file version " + std::to_string(version));
  const auto count = get_le<std::uint64_t>(header.data() + 8);

  const auto size = std::filesystem::file_size(path);
  if (size != kTrialHeaderBytes + count * kTrialRecordBytes)
    throw FormatError("trial file payload size does not match header count: " + path.string());

  std::vector<TrialRecord> records(count);
  constexpr std::size_t kBatch = 1 << 14;
  std::vector<unsigned char> buffer(kBatch * kTrialRecordBytes);
  for (std::size_t start = 0; start < count; start += kBatch) {
    const std::size_t n = std::min<std::size_t>(kBatch, count - start);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(n * kTrialRecordBytes));
    if (in.gcount() != static_cast<std::streamsize>(n * kTrialRecordBytes))
      throw FormatError("truncated trial file payload: " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char* p = buffer.data() + i * kTrialRecordBytes;
      TrialRecord& r = records[start + i];
      r.index = get_le<std::uint64_t>(p);
      r.x = p[8];
      r.b = p[9];
      r.point.re = get_le<double>(p + 10);
      r.point.im = get_le<double>(p + 18);
      if (r.x > 1 || (r.b > 1 && r.b != kUnassigned))
        throw FormatError("invalid bit value in record " + std::to_string(start + i));
    }
  }
  return records;
}

void write_trials_csv(std::span<const TrialRecord> records, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw FormatError("cannot open csv for writing: " + path.string());
  std::fputs("index,x,b,re,im\n", f);
  for (const TrialRecord& r : records)
    std::fprintf(f, "%llu,%u,%u,%.17g,%.17g\n", static_cast<unsigned long long>(r.index), r.x, r.b,
                 r.point.re, r.point.im);
  if (std::fclose(f) != 0) throw FormatError("write failed: " + path.string());
}

}  // namespace sdiq
