#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "otrates/error.hpp"
#include "otrates/io.hpp"
#include "otrates/kernels.hpp"

using namespace otrates;
using oracle::random_cloud;

TEST_CASE("parallel kernels are bitwise equal to their serial twins") {
  const CostSpec c = CostSpec::smooth_power(1.5, 1e-2, 4);
  const auto x = random_cloud(4, 257, 1), y = random_cloud(4, 131, 2);
  const auto ref = kernels::cost_matrix_serial(x, y, c);
  for (int t : {1, 2, 3, 8}) CHECK(kernels::cost_matrix(x, y, c, t).data == ref.data);
  Vec vals(131, 0.25), a(257), b(257);
  kernels::min_plus_serial(y, vals, c, x, a);
  for (int t : {1, 2, 5}) {
    kernels::min_plus(y, vals, c, x, b, t);
    CHECK(a == b);
  }
  std::vector<double> row(131);
  kernels::cost_row(x, 17, y, c, row);
  for (std::size_t j = 0; j < 131; ++j) CHECK(row[j] == ref(17, j));
  CHECK_FALSE(kernels::all_finite(std::vector<double>{1.0, NAN}));
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.0, 0.0}) CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK_THROWS_AS(parse_double("1.5x"), UsageError);
  CHECK_THROWS_AS(parse_int("3.0"), UsageError);
}

TEST_CASE("atomic writes and point files") {
  const auto dir = std::filesystem::temp_directory_path() / "otrates_io_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "p.csv", "0,1,0.5\n2,3,0.5\n");
  CHECK(read_file(dir / "p.csv") == "0,1,0.5\n2,3,0.5\n");
  const auto w = read_points_csv(dir / "p.csv", true);
  CHECK(w.points.dim() == 2);
  CHECK(w.weights == std::vector<double>{0.5, 0.5});
  write_file_atomic(dir / "bad.csv", "0,1\n2\n");
  CHECK_THROWS_AS(read_points_csv(dir / "bad.csv", false), UsageError);
  CHECK(digest_hex("") == "cbf29ce484222325");
  std::filesystem::remove_all(dir);
}
