#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swmlp::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Strict numeric parsing; throws std::invalid_argument on trailing garbage or overflow.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string join_doubles(std::span<const double> values, char sep);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and renames, so readers never observe a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace swmlp::text
