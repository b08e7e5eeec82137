#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "otrates/diagnostics.hpp"
#include "otrates/duality.hpp"
#include "otrates/error.hpp"
#include "otrates/solver.hpp"

using namespace otrates;
using oracle::random_cloud;

namespace {

TransportPlan quadratic_plan(std::size_t n, std::uint64_t seed, PointCloud& x, PointCloud& y) {
  x = random_cloud(3, n, seed, -0.5, 0.5);
  y = random_cloud(3, n, seed + 1, -0.5, 0.5);
  return solve_assignment(x, y, CostSpec::power_lr(2, 2, 3));
}

}  // namespace

TEST_CASE("quadratic potentials are semiconcave with the cost's constant") {
  PointCloud x, y;
  const auto plan = quadratic_plan(64, 3, x, y);
  const CostSpec c = CostSpec::power_lr(2, 2, 3);
  const PotentialHandle phi(y, plan.dual_nu, c);
  const Region box = Region::box(Vec(3, 0.0), 0.5);
  const auto ok = semiconcavity_check(phi, c.lambda_on_ball(2.0), box, 4000, 1, 2);
  CHECK(ok.midpoint.pass);
  CHECK(ok.lipschitz.pass);
  CHECK(ok.midpoint.max_violation <= 1e-8);
  // too small a constant leaves convex curvature behind
  const auto bad = semiconcavity_check(phi, 0.5, box, 4000, 1, 2);
  CHECK_FALSE(bad.midpoint.pass);
  CHECK(bad.midpoint.witness.contains("x"));
  // thread count does not change the report
  const auto ser = semiconcavity_check(phi, c.lambda_on_ball(2.0), box, 4000, 1, 1);
  CHECK(ser.midpoint == ok.midpoint);
  CHECK(ser.lipschitz == ok.lipschitz);
}

TEST_CASE("displacement profile on a hand-made plan") {
  const PointCloud x(1, Vec{0.0, 1.0}), y(1, Vec{3.0, -1.0});
  TransportPlan plan;
  plan.entries = {{0, 0, 0.5}, {1, 1, 0.5}};
  const auto prof = displacement_profile(plan, x, y);
  CHECK(prof.max_ratio == doctest::Approx(3.0));
  CHECK(prof.entries == 2);
  REQUIRE(prof.deciles.size() == 11);
  CHECK(prof.deciles.front() == doctest::Approx(0.5));
  CHECK(prof.deciles.back() == doctest::Approx(3.0));
}

TEST_CASE("superdifferential growth on extended potentials") {
  PointCloud x, y;
  const auto plan = quadratic_plan(50, 7, x, y);
  const CostSpec c = CostSpec::power_lr(2, 2, 3);
  const auto ext = extend_potentials(plan, x, y, c);
  const double R = std::max(4.0, potential_bound_on_ball(ext.phi, 8.0));
  SuperdiffOptions opts;
  opts.probes = 500;
  const auto rep = superdiff_growth_check(ext.phi, 8.0, R, 2.0, c.meta().kappa, opts);
  CHECK(rep.pass);
  CHECK(rep.witness["nested"].size() == 3);
  // an R that |phi| exceeds fails the precondition
  const auto broken = superdiff_growth_check(ext.phi, 8.0, 4.0, 2.0, c.meta().kappa, opts);
  CHECK_FALSE(broken.pass);
  CHECK(broken.witness["precondition"] == "|phi| <= R on B(0,r)");
  CHECK_THROWS_AS(superdiff_growth_check(ext.phi, 2.0, R, 2.0, 1.0, opts), UsageError);
  CHECK(superdiff_default_tolerance(2.0, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("reports round-trip through json lines") {
  DiagnosticReport r;
  r.name = "midpoint";
  r.max_violation = 1.25e-9;
  r.tolerance = 1e-8;
  r.samples_used = 10;
  r.pass = true;
  r.witness = {{"x", {0.5, 0.25}}};
  const auto line = r.to_line();
  CHECK(line.find('\n') == std::string::npos);
  CHECK(DiagnosticReport::from_json(nlohmann::json::parse(line)) == r);
  CHECK_THROWS_AS(DiagnosticReport::from_json(nlohmann::json{{"name", 3}}), UsageError);
}
