#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otrates/points.hpp"

namespace otrates {

// Shortest decimal form that parses back to the same double (at most 17
// significant digits).
std::string format_double(double x);

// Strict parse: the whole token must be a number.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Headerless numeric CSV; every row must have the same number of columns.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path);

struct WeightedPoints {
  PointCloud points;
  std::vector<double> weights;  // empty when the file carries no weight column
};
// Reads "x1,...,xd[,weight]"; the last column is a weight iff `weighted`.
WeightedPoints read_points_csv(const std::filesystem::path& path, bool weighted);

// Writes through a temporary file in the same directory and renames it into
// place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string digest_hex(std::string_view bytes);

}  // namespace otrates
