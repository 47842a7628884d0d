#pragma once

// Trial file layout (all little-endian):
//   header  : "SDIQ" | version u16 | flags u16 | count u64          (16 bytes)
//   record  : index u64 | x u8 | b u8 (255 = unassigned) | re f64 | im f64  (26 bytes)

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sdiq/acquisition.hpp"

namespace sdiq {

inline constexpr std::uint16_t kTrialFileVersion = 1;
inline constexpr std::size_t kTrialHeaderBytes = 16;
inline constexpr std::size_t kTrialRecordBytes = 26;

/// flags bit 0: every record carries an assigned outcome.
inline constexpr std::uint16_t kFlagClassified = 0x1;

void write_trials(std::span<const TrialRecord> records, const std::filesystem::path& path);
std::vector<TrialRecord> read_trials(const std::filesystem::path& path);

/// Debug export with header `index,x,b,re,im`; unassigned outcomes print as 255.
void write_trials_csv(std::span<const TrialRecord> records, const std::filesystem::path& path);

}  // namespace sdiq
