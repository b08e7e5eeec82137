#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "otrates/costs.hpp"
#include "otrates/kernels.hpp"
#include "otrates/measures.hpp"
#include "otrates/points.hpp"

namespace otrates {

enum class SolveMethod { kAssignment, kNetworkSimplex, kBruteForce };
std::string to_string(SolveMethod m);

struct PlanEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

// Optimal coupling with Kantorovich potentials. Potentials are normalised so
// that sum(dual_nu) == 0.
struct TransportPlan {
  std::vector<PlanEntry> entries;  // sorted by (i, j)
  double value = 0.0;
  std::vector<double> dual_mu;
  std::vector<double> dual_nu;
  SolveMethod method = SolveMethod::kAssignment;
};

// Equal-size uniform marginals: shortest augmenting path (Jonker-Volgenant).
TransportPlan solve_assignment(const PointCloud& x, const PointCloud& y, const CostSpec& cost);
// General discrete marginals: network simplex on the bipartite flow problem.
TransportPlan solve_general(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);
// Exhaustive search over permutations; n <= 9.
TransportPlan brute_force(const PointCloud& x, const PointCloud& y, const CostSpec& cost);

// Sum of mass * alt_cost(x_i, y_j) over the plan's entries.
double plan_cost_under(const TransportPlan& plan, const PointCloud& x, const PointCloud& y, const CostSpec& alt_cost);

// Matrix-level solvers, exposed for tests and benchmarks.
struct AssignmentSolution {
  std::vector<int> row_to_col;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials, u_i + v_j <= C_ij
};
AssignmentSolution solve_lap(const kernels::CostMatrix& c);
// Same algorithm, recomputing cost rows on demand instead of storing n^2 entries.
AssignmentSolution solve_lap_lazy(const PointCloud& x, const PointCloud& y, const CostSpec& cost);

struct FlowSolution {
  std::vector<PlanEntry> entries;
  std::vector<double> u;
  std::vector<double> v;
  std::int64_t pivots = 0;
};
struct NetworkSimplexOptions {
  std::int64_t max_pivots = 200'000'000;
};
FlowSolution solve_transport(const kernels::CostMatrix& c, const std::vector<double>& supply,
                             const std::vector<double>& demand, const NetworkSimplexOptions& opts = {});

// Certificate of optimality for a plan against its marginals and cost.
struct PlanCheck {
  double marginal_error = 0.0;       // max |row/col sum - weight|
  double min_mass = 0.0;
  double slackness_violation = 0.0;  // max |u_i + v_j - c_ij| over entries
  double dual_infeasibility = 0.0;   // max (u_i + v_j - c_ij)_+ over all pairs
  double duality_gap = 0.0;          // |primal - dual|
  double primal = 0.0;
  double dual = 0.0;
  std::size_t support_size = 0;
};
PlanCheck check_plan(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     const CostSpec& cost);

}  // namespace otrates
