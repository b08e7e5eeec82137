#include "otrates/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "otrates/error.hpp"

namespace otrates {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty())
    throw UsageError("malformed number '" + std::string(token) + "'");
  return value;
}

long long parse_int(std::string_view token) {
  token = trim(token);
  long long value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty())
    throw UsageError("malformed integer '" + std::string(token) + "'");
  return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  const char* ws = " \t\r\n";
  std::size_t b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  std::size_t e = text.find_last_not_of(ws);
  return text.substr(b, e - b + 1);
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split(line, ',')) {
      try {
        row.push_back(parse_double(tok));
      } catch (const UsageError& e) {
        throw UsageError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns, found " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("'" + path.string() + "' contains no rows");
  return rows;
}

WeightedPoints read_points_csv(const std::filesystem::path& path, bool weighted) {
  auto rows = read_numeric_csv(path);
  const int cols = static_cast<int>(rows.front().size());
  const int dim = weighted ? cols - 1 : cols;
  if (dim < 1) throw UsageError("'" + path.string() + "' has no coordinate columns");
  WeightedPoints out{PointCloud(dim, rows.size()), {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto dst = out.points[i];
    for (int k = 0; k < dim; ++k) dst[k] = rows[i][k];
    if (weighted) out.weights.push_back(rows[i][dim]);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw NumericalError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw NumericalError("cannot move '" + tmp.string() + "' into place");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace otrates
