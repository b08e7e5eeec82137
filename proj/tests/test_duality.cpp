#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "otrates/duality.hpp"
#include "otrates/error.hpp"
#include "otrates/kernels.hpp"
#include "otrates/solver.hpp"

using namespace otrates;
using oracle::random_cloud;

namespace {

// Straight from the definition, no kernels.
double conj_at(const PointCloud& pts, const Vec& vals, const CostSpec& c, std::span<const double> x) {
  double best = INFINITY;
  for (std::size_t j = 0; j < pts.size(); ++j) best = std::min(best, c(x, pts[j]) - vals[j]);
  return best;
}

}  // namespace

TEST_CASE("handle evaluation matches the definition, serial and parallel") {
  const CostSpec c = CostSpec::power_lr(1.5, 2, 3);
  const auto anchors = random_cloud(3, 40, 1), q = random_cloud(3, 300, 2, -2, 2);
  Vec vals(40);
  CounterRng rng(3);
  for (double& v : vals) v = rng.uniform(-1, 1);
  const PotentialHandle f(anchors, vals, c);
  const Vec par = f.evaluate(q, 4), ser = f.evaluate_serial(q);
  CHECK(par == ser);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(ser[i] == conj_at(anchors, vals, c, q[i]));
  const PotentialHandle capped(anchors, vals, c, 0.1);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(capped(q[i]) <= 0.1);
}

TEST_CASE("double conjugate is the identity on c-concave handles") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int d = 1 + static_cast<int>(seed % 4);
    const CostSpec c = seed % 2 ? CostSpec::power_lr(2, 2, d) : CostSpec::smooth_power(1.5, 1e-2, d);
    const auto anchors = random_cloud(d, 25, seed);
    Vec vals(25);
    CounterRng rng(seed + 9);
    for (double& v : vals) v = rng.uniform(-0.5, 0.5);
    const PotentialHandle f(anchors, vals, c);
    CHECK(double_conjugate_check(f, random_cloud(d, 60, seed + 100, -1.5, 1.5)) <= 1e-12);
  }
}

TEST_CASE("extension of plan duals") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int d = 2 + static_cast<int>(seed % 3);
    const CostSpec c = seed % 2 ? CostSpec::power_lr(2, 2, d) : CostSpec::power_lr(3, 2, d);
    const std::size_t n = 20 + seed;
    const auto x = random_cloud(d, n, seed), y = random_cloud(d, n, seed + 50);
    const auto plan = solve_assignment(x, y, c);
    const auto extra = random_cloud(d, 30, seed + 99, -1.2, 1.2);
    const auto ext = extend_potentials(plan, x, y, c, std::nullopt, extra);
    CHECK(*std::max_element(ext.f.begin(), ext.f.end()) <= 0.0);
    CHECK(*std::min_element(ext.g.begin(), ext.g.end()) >= 0.0);
    const auto& U = ext.universe;
    const Vec phi = ext.phi.evaluate(U), psi = ext.psi.evaluate(U);
    // (i) phi(x) + psi(y) <= c(x, y) on U x U
    double worst = -INFINITY;
    for (std::size_t s1 = 0; s1 < U.size(); ++s1)
      for (std::size_t s2 = 0; s2 < U.size(); ++s2) worst = std::max(worst, phi[s1] + psi[s2] - c(U[s1], U[s2]));
    CHECK(worst <= 1e-9);
    // (ii) agreement with the normalised duals
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(phi[i] - ext.f[i]) <= 1e-9);
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(psi[n + j] - ext.g[j]) <= 1e-9);
    // (iii) bounded by the cap
    for (std::size_t u = 0; u < U.size(); ++u) CHECK(std::max(std::abs(phi[u]), std::abs(psi[u])) <= ext.cap + 1e-9);
    // (iv) support pairs sit in both superdifferentials
    for (const auto& e : plan.entries) {
      CHECK(std::abs(phi[e.i] + psi[n + e.j] - c(x[e.i], y[e.j])) <= 1e-9);
      const auto from_x = superdifferential_probe(ext.phi, x[e.i], 1e-9);
      const auto from_y = superdifferential_probe(ext.psi, y[e.j], 1e-9);
      CHECK(std::find(from_x.begin(), from_x.end(), n + e.j) != from_x.end());
      CHECK(std::find(from_y.begin(), from_y.end(), e.i) != from_y.end());
    }
  }
}

TEST_CASE("extension refuses caps below the pair costs") {
  const CostSpec c = CostSpec::power_lr(2, 2, 2);
  const auto x = random_cloud(2, 6, 1), y = random_cloud(2, 6, 2, 3, 4);
  const auto plan = solve_assignment(x, y, c);
  CHECK_THROWS_AS(extend_potentials(plan, x, y, c, 0.5), UsageError);
}

TEST_CASE("potential bound on a ball is a real bound") {
  const CostSpec c = CostSpec::power_lr(2, 2, 3);
  const auto anchors = random_cloud(3, 30, 4);
  Vec vals(30);
  CounterRng rng(8);
  for (double& v : vals) v = rng.uniform(-1, 1);
  const PotentialHandle f(anchors, vals, c);
  const double R = potential_bound_on_ball(f, 4.0);
  const Region ball = Region::ball(Vec(3, 0.0), 4.0);
  for (int t = 0; t < 2000; ++t) CHECK(std::abs(f(ball.draw(rng))) <= R);
}

TEST_CASE("superdifferential probe returns the argmin anchors") {
  const CostSpec c = CostSpec::power_lr(2, 2, 1);
  const PointCloud anchors(1, Vec{-1.0, 0.0, 1.0});
  const PotentialHandle f(anchors, Vec{0.0, 0.0, 0.0}, c);
  CHECK(superdifferential_probe(f, Vec{0.1}) == std::vector<std::size_t>{1});
  const auto tie = superdifferential_probe(f, Vec{0.5});
  CHECK(tie == std::vector<std::size_t>{1, 2});
}

TEST_CASE("optimal supports are cyclically monotone, shuffled ones are not") {
  const CostSpec c = CostSpec::power_lr(2, 2, 2);
  const auto x = random_cloud(2, 40, 5), y = random_cloud(2, 40, 6);
  const auto plan = solve_assignment(x, y, c);
  const auto [xs, ys] = support_pairs(plan, x, y);
  CHECK(cyclical_monotonicity_check(xs, ys, c, 5, 2000, 1).max_violation <= 1e-12);
  // identity pairing of independent draws is far from optimal
  const auto bad = cyclical_monotonicity_check(x, y, c, 3, 2000, 1);
  CHECK(bad.max_violation > 1e-3);
  CHECK_FALSE(bad.witness.empty());
}
