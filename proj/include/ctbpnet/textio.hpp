#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctbpnet::textio {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

/// Strict parse of the whole field; throws std::invalid_argument.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Splits on commas. Fields are trimmed of surrounding whitespace; quoting is
/// not supported.
std::vector<std::string> split_fields(std::string_view line);

/// Reads a text file, transparently gunzipping when the name ends in ".gz".
std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename. Gzip-compresses for ".gz" names.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Non-empty lines with trailing '\r' removed.
std::vector<std::string> lines(std::string_view text);

}  // namespace ctbpnet::textio
