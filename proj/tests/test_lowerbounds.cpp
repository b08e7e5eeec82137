#include "doctest.h"

#include <cmath>

#include "otrates/error.hpp"
#include "otrates/lowerbounds.hpp"
#include "otrates/points.hpp"

using namespace otrates;

TEST_CASE("packing sets are separated and inside the ball") {
  for (int d : {1, 2, 3, 5})
    for (std::size_t m : {1u, 7u, 32u, 100u}) {
      const Vec c(d, 0.3);
      const auto pack = packing_set(c, 0.5, m);
      REQUIRE(pack.points.size() == m);
      double min_sep = INFINITY;
      for (std::size_t a = 0; a < m; ++a) {
        Vec off(d);
        for (int k = 0; k < d; ++k) off[k] = pack.points[a][k] - c[k];
        CHECK(norm2(off) <= 0.5 + 1e-12);
        for (std::size_t b = a + 1; b < m; ++b) {
          Vec z(d);
          for (int k = 0; k < d; ++k) z[k] = pack.points[a][k] - pack.points[b][k];
          min_sep = std::min(min_sep, norm2(z));
        }
      }
      if (m > 1) CHECK(min_sep >= pack.separation - 1e-12);
      // coarsest lattice: one step coarser would not fit m nodes
      CHECK(pack.separation == doctest::Approx(1.0 / pack.lattice_k));
    }
}

TEST_CASE("divergences against uniform") {
  const auto d = divergences({0.5, 0.5, 0.0, 0.0}, 4);
  CHECK(d.tv == doctest::Approx(0.5));
  CHECK(d.chi2 == doctest::Approx(1.0));
  CHECK(divergences({0.25, 0.25, 0.25, 0.25}, 4).tv == 0.0);
  CHECK_THROWS_AS(divergences({0.5, 0.6}, 2), UsageError);
}

TEST_CASE("q families") {
  const auto split = QFamily::parse("split:0.25").make(40, 0);
  CHECK(divergences(split, 40).tv == doctest::Approx(0.25).epsilon(1e-12));
  const auto spike = QFamily::parse("spike:0.5").make(10, 0);
  CHECK(spike[0] == doctest::Approx(0.55));
  const auto dir1 = QFamily::parse("dirichlet:1").make(20, 7), dir2 = QFamily::parse("dirichlet:1").make(20, 7);
  CHECK(dir1 == dir2);
  CHECK(QFamily::parse("uniform").to_string() == "uniform");
  CHECK_THROWS_AS(QFamily::parse("split:0.9"), UsageError);
  CHECK_THROWS_AS(QFamily::parse("zipf:1"), UsageError);
}

TEST_CASE("gadget at uniform q is the translation cost") {
  for (const CostSpec& c : {CostSpec::power_lr(2, 2, 3), CostSpec::power_lr(1, 2, 3), CostSpec::smooth_power(1.5, 1e-2, 3)}) {
    const Vec z0{0.1, -0.2, 0.05};
    const auto r = minimax_gadget(27, std::vector<double>(27, 1.0 / 27), z0, c, 3);
    CHECK(std::abs(r.value_minus_h) <= 1e-10);
  }
}

TEST_CASE("gadget sign and jensen bounds") {
  const CostSpec c = CostSpec::power_lr(2, 2, 2);
  const auto q = QFamily::parse("split:0.25").make(16, 0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto at_zero = minimax_gadget(16, q, Vec(2, 0.0), c, seed);
    CHECK(at_zero.value_minus_h >= -1e-10);
    const auto shifted = minimax_gadget(16, q, Vec{0.3, 0.1}, c, seed);
    CHECK(shifted.jensen_gap >= -1e-10);
    CHECK(shifted.tv == doctest::Approx(0.25));
  }
  const auto a = minimax_gadget(16, q, Vec(2, 0.0), c, 4), b = minimax_gadget(16, q, Vec(2, 0.0), c, 4);
  CHECK(a.value == b.value);
}
