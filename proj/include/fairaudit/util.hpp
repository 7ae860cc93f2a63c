#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fairaudit::util {

/// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

/// Current wall-clock time as a UTC ISO-8601 string ("2026-01-02T03:04:05Z").
std::string iso8601_now_utc();

/// Lowercase token derived from a display name: alphanumeric runs kept,
/// everything else collapsed to single hyphens ("Class/Team Activity
/// Planning" -> "class-team-activity-planning").
std::string slugify(std::string_view name);

std::string trim(std::string_view s);

/// Whole file as a string. Throws IoError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Write via temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

/// Calls `fn(line_number, line)` for every non-empty line. Line numbers are 1-based.
void for_each_line(const std::string& content,
                   const std::function<void(std::size_t, std::string_view)>& fn);

/// Replace every occurrence of `{{key}}` in `text`. Returns the number of
/// substitutions made for the caller to check against expectations.
std::size_t substitute_placeholder(std::string& text, std::string_view key,
                                   std::string_view value);

/// Uniform draw from [0, bound) via rejection sampling on a mt19937_64
/// stream. Unlike std::uniform_int_distribution the result sequence is
/// identical on every platform for a given seed.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound);

/// Round half-up to one decimal and format with exactly one decimal place
/// ("60.5"). Used for percentage cells.
std::string format_percent(double value);

/// Fixed three-decimal rendering used for correlation coefficients ("0.783").
std::string format_coefficient(double value);

}  // namespace fairaudit::util
