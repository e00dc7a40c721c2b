#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nightgrav {

/// Round-trip-safe decimal rendering (12 significant digits) used by every
/// exported text format, so reruns produce byte-identical files.
std::string format_double(double v);

std::vector<std::string> split(std::string_view line, char sep);

/// Strict full-token double parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

/// Opens for reading or throws std::runtime_error naming the path.
std::ifstream open_input(const std::filesystem::path& path);
/// Opens for writing or throws std::runtime_error naming the path.
std::ofstream open_output(const std::filesystem::path& path);

std::string trim(std::string_view s);

}  // namespace nightgrav
