#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "otrates/costs.hpp"
#include "otrates/duality.hpp"
#include "otrates/solver.hpp"

namespace otrates {

struct DiagnosticReport {
  std::string name;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::int64_t samples_used = 0;
  bool pass = false;          // max_violation <= tolerance, unless a precondition failed
  nlohmann::json witness;     // null when there is nothing to show

  nlohmann::json to_json() const;
  static DiagnosticReport from_json(const nlohmann::json& j);
  std::string to_line() const;  // one JSON object, no newline
  bool operator==(const DiagnosticReport&) const = default;
};

struct SemiconcavityReport {
  DiagnosticReport midpoint;   // concavity of phi - (lambda/2)|x|^2
  DiagnosticReport lipschitz;  // difference quotients of the same map against 2 lambda
};

// Samples pairs (x, x') uniformly in `region` and checks the midpoint triple.
SemiconcavityReport semiconcavity_check(const PotentialHandle& phi, double lambda, const Region& region,
                                        std::int64_t triples, std::uint64_t seed, int threads = 0);

struct DisplacementProfile {
  double max_ratio = 0.0;           // max |y| / (|x| + 1) over positive-mass entries
  std::vector<double> deciles;      // 0%, 10%, ..., 100%
  std::size_t entries = 0;
};
DisplacementProfile displacement_profile(const TransportPlan& plan, const PointCloud& x, const PointCloud& y);

struct SuperdiffOptions {
  std::int64_t probes = 2000;
  std::uint64_t seed = 0;
  // Pass threshold for the statistic; <= 0 picks 2^max(p-2,0) (2 + 2^(p-1) kappa).
  double tolerance = 0.0;
  double tie_tol = 1e-9;
};

// Statistic max |y|^(p-1) / (r^(p-1) + R) over y in the probe sets of points
// x in B(0, r/2). Refuses r < 4 or R < 4. If sampled |phi| exceeds R on B(0, r)
// the report fails with the offending point as witness.
DiagnosticReport superdiff_growth_check(const PotentialHandle& phi, double r, double bound_R, double growth_p,
                                        double kappa, const SuperdiffOptions& opts = {});

double superdiff_default_tolerance(double growth_p, double kappa);

}  // namespace otrates
