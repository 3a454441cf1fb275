#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace synthelite::util {

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

std::string trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

/// Root of the shipped prompt and data assets: $SYNTHELITE_ASSETS when set,
/// otherwise the directory configured at build time.
std::filesystem::path asset_dir();

/// ISO-8601 UTC timestamp with milliseconds.
std::string utc_timestamp();

} // namespace synthelite::util
