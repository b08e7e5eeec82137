#include "doctest.h"

#include <cmath>

#include "otrates/error.hpp"
#include "otrates/measures.hpp"
#include "otrates/points.hpp"

using namespace otrates;

TEST_CASE("samplers are deterministic and respect their supports") {
  const auto ball = uniform_ball(Vec{1.0, -1.0, 0.5}, 0.25);
  const auto a = sample_points(ball, 500, 42), b = sample_points(ball, 500, 42), c = sample_points(ball, 500, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec z{a[i][0] - 1.0, a[i][1] + 1.0, a[i][2] - 0.5};
    CHECK(norm2(z) <= 0.25 + 1e-15);
  }
  const auto cube = sample_points(uniform_cube(Vec(2, 0.0), 0.5), 300, 1);
  for (std::size_t i = 0; i < cube.size(); ++i) CHECK(std::max(std::abs(cube[i][0]), std::abs(cube[i][1])) <= 0.5);
}

TEST_CASE("uniform ball fills its volume") {
  // P(|X| <= r/2) = 2^-d
  const int d = 3;
  const auto pts = sample_points(uniform_ball(Vec(d, 0.0), 1.0), 20000, 7);
  int inside = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) inside += norm2(pts[i]) <= 0.5;
  CHECK(inside / 20000.0 == doctest::Approx(0.125).epsilon(0.1));
}

TEST_CASE("gaussian sampler moments") {
  Matrix cov{2, {2.0, 0.6, 0.6, 1.0}};
  const auto pts = sample_points(gaussian(Vec{1.0, -2.0}, cov), 40000, 3);
  double m0 = 0, m1 = 0, s00 = 0, s01 = 0, s11 = 0;
  const double n = static_cast<double>(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) m0 += pts[i][0] / n, m1 += pts[i][1] / n;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double a = pts[i][0] - m0, b = pts[i][1] - m1;
    s00 += a * a / n, s01 += a * b / n, s11 += b * b / n;
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(m1 == doctest::Approx(-2.0).epsilon(0.03));
  CHECK(s00 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(s01 == doctest::Approx(0.6).epsilon(0.08));
  CHECK(s11 == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(gaussian(Vec{0, 0}, Matrix{2, {1.0, 2.0, 2.0, 1.0}}), UsageError);
}

TEST_CASE("matrix square root") {
  Matrix m{2, {4.0, 1.0, 1.0, 3.0}};
  const Matrix r = sqrtm_psd(m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) s += r(i, k) * r(k, j);
      CHECK(s == doctest::Approx(m(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("sampler parsing") {
  const auto b = parse_sampler("ball:c=0;d=5;r=0.25");
  CHECK(b.kind == SamplerSpec::Kind::kUniformBall);
  CHECK(b.dim() == 5);
  CHECK(b.extent == 0.25);
  const auto g = parse_sampler("gauss:m=0;d=3;cov=I");
  CHECK(g.kind == SamplerSpec::Kind::kGaussian);
  CHECK(g.covariance(2, 2) == 1.0);
  auto lookup = [&](std::string_view name) -> const SamplerSpec* { return name == "mu" ? &b : nullptr; };
  const auto t = parse_sampler("translate:mu;z0=0.1", lookup);
  const auto flat = t.flattened();
  CHECK(flat.kind == SamplerSpec::Kind::kUniformBall);
  CHECK(flat.center[4] == doctest::Approx(0.1));
  CHECK_THROWS_AS(parse_sampler("ball:c=0;d=5"), UsageError);
  CHECK_THROWS_AS(parse_sampler("ball:c=0;d=5;r=1;q=2"), UsageError);
  CHECK_THROWS_AS(parse_sampler("translate:nu;z0=1", lookup), UsageError);
  CHECK_THROWS_AS(parse_sampler("disk:c=0;r=1"), UsageError);
}

TEST_CASE("closed-form ground truths") {
  const CostSpec c2 = CostSpec::power_lr(2, 2, 5);
  const Vec z0(5, 0.5 / std::sqrt(5.0));
  const auto loc = ground_truth_location(uniform_ball(Vec(5, 0.0), 0.25), z0, c2);
  CHECK(loc.exact_value == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(loc.provenance == Provenance::kLocationFamily);
  const auto same = ground_truth_identical(uniform_ball(Vec(5, 0.0), 0.25), CostSpec::power_lr(1, 2, 5));
  CHECK(same.exact_value == 0.0);

  // 1-d: W2^2 = (m1 - m2)^2 + (s1 - s2)^2
  const auto g = ground_truth_gaussian_w2(Vec{0.0}, Matrix{1, {4.0}}, Vec{1.0}, Matrix{1, {1.0}});
  CHECK(g.exact_value == doctest::Approx(2.0).epsilon(1e-12));
  // commuting covariances: sum over the eigenbasis
  const auto d = ground_truth_gaussian_w2(Vec{0, 0}, Matrix{2, {4.0, 0.0, 0.0, 9.0}}, Vec{0, 0}, Matrix::identity(2));
  CHECK(d.exact_value == doctest::Approx(1.0 + 4.0).epsilon(1e-12));
}

TEST_CASE("concentration certificate for a standard gaussian") {
  const auto cert = concentration_certificate(gaussian(Vec(2, 0.0), Matrix::identity(2)), 20000, 1);
  REQUIRE(cert.meta.has_value());
  CHECK(cert.meta->beta == 2.0);
  CHECK(cert.mc_integral <= 2.0 + 4 * cert.mc_standard_error);
}
