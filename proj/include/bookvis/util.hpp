#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bookvis {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Writes to a sibling temp file, fsyncs, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Locale-independent fixed-point formatting; "-0.00" is normalized to "0.00".
std::string format_fixed(double value, int decimals = 2);

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);

using Timestamp = std::chrono::system_clock::time_point;
std::string format_rfc3339(Timestamp t);
Timestamp parse_rfc3339(std::string_view text);

// splitmix64 step; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace bookvis
