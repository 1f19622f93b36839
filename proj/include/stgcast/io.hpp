#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stgcast::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Splits one CSV line on commas; no quoting (ids and numbers only).
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// printf "%.17g".
std::string format_double17(double v);

double parse_double(std::string_view s);

/// FNV-1a over the file bytes, rendered as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace stgcast::io
