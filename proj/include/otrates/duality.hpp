#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "otrates/costs.hpp"
#include "otrates/points.hpp"
#include "otrates/solver.hpp"

namespace otrates {

// f(x) = min_j { c(x, y_j) - lambda_j }, optionally truncated at `cap`.
class PotentialHandle {
 public:
  PotentialHandle(PointCloud anchors, Vec values, CostSpec cost, std::optional<double> cap = std::nullopt);

  const PointCloud& anchors() const { return anchors_; }
  const Vec& values() const { return values_; }
  const CostSpec& cost() const { return cost_; }
  std::optional<double> cap() const { return cap_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::span<const double> x) const;
  // threads <= 0 uses the OpenMP default.
  Vec evaluate(const PointCloud& queries, int threads = 0) const;
  Vec evaluate_serial(const PointCloud& queries) const;

 private:
  PointCloud anchors_;
  Vec values_;
  CostSpec cost_;
  std::optional<double> cap_;
};

// Conjugate of the discrete function points_j -> values_j.
PotentialHandle c_conjugate(const PointCloud& points, const Vec& values, const CostSpec& cost);

// Certified bound on sup |f| over B(0, r), from sup h on B(0, r + |y_j|) and
// the anchor values.
double potential_bound_on_ball(const PotentialHandle& f, double r);

// max |f^cc - f| over the test points, where the inner infimum runs over the
// handle's anchors together with the test points.
double double_conjugate_check(const PotentialHandle& f, const PointCloud& test_points);

struct ExtendedPotentials {
  PotentialHandle eta;   // min_i { c(x_i, .) - f_i } capped at R
  PotentialHandle phi;   // eta^c
  PotentialHandle psi;   // eta^cc
  double cap = 0.0;
  double shift = 0.0;    // f = dual_mu - shift <= 0, g = dual_nu + shift >= 0
  Vec f;
  Vec g;
  PointCloud universe;   // supports followed by the extra points
};

// Extends the plan's duals to bounded c-concave potentials. Conjugates are
// taken over the supports plus `extra` points, so every identity of the
// construction holds exactly at those points. Without a cap, uses
// max(kappa (2R)^p, sup of h on B(0, 2R)) with R the largest norm involved.
ExtendedPotentials extend_potentials(const TransportPlan& plan, const PointCloud& x, const PointCloud& y,
                                     const CostSpec& cost, std::optional<double> cap = std::nullopt,
                                     const PointCloud& extra = {});

// Anchor indices attaining min_j { c(x, y_j) - lambda_j } within tol.
std::vector<std::size_t> superdifferential_probe(const PotentialHandle& f, std::span<const double> x,
                                                 double tol = 1e-9);

struct CycleCheck {
  double max_violation = 0.0;
  std::vector<std::size_t> witness;  // indices of the worst cycle, in order
  int witness_shift = 0;
  std::int64_t trials = 0;
};

// Pairs are (xs[t], ys[t]). Samples index subsets of size 2..max_len and all
// their cyclic shifts; violation = sum c(x_j, y_j) - sum c(x_s(j), y_j), clipped at 0.
CycleCheck cyclical_monotonicity_check(const PointCloud& xs, const PointCloud& ys, const CostSpec& cost,
                                       int max_len, std::int64_t trials, std::uint64_t seed);

// Source and target points of the plan's positive-mass entries, aligned.
std::pair<PointCloud, PointCloud> support_pairs(const TransportPlan& plan, const PointCloud& x,
                                                const PointCloud& y);

}  // namespace otrates
