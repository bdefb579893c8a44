#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV and JSON-lines readers/writers.
namespace alloydpo::textio {

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Shortest decimal that round-trips the double.
std::string format_double(double value);
// Fixed-point rendering with `decimals` places, never "-0.0000".
std::string format_fixed(double value, int decimals);
// Strict full-string parse; nullopt on any trailing garbage or non-finite value.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace alloydpo::textio
