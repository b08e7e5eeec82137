#include "otrates/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "otrates/error.hpp"

namespace otrates {

namespace {

constexpr std::size_t kDenseLimit = 4096;

void require_clouds(const PointCloud& x, const PointCloud& y, const CostSpec& cost) {
  if (x.empty() || y.empty()) throw UsageError("empty point cloud");
  if (x.dim() != cost.dim() || y.dim() != cost.dim())
    throw UsageError("point dimension " + std::to_string(x.dim()) + "/" + std::to_string(y.dim()) +
                     " does not match cost dimension " + std::to_string(cost.dim()));
}

// Shift so that sum(v) == 0; u_i + v_j is unchanged.
void normalise(std::vector<double>& u, std::vector<double>& v) {
  const double shift = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& t : v) t -= shift;
  for (double& t : u) t += shift;
}

// One c-transform each way: feasible, and no worse than the input pair.
void tighten(const kernels::CostMatrix& c, std::vector<double>& u, std::vector<double>& v) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::fill(v.begin(), v.end(), kInf);
  for (std::size_t i = 0; i < c.rows; ++i) {
    const double* row = c.row(i);
    for (std::size_t j = 0; j < c.cols; ++j) v[j] = std::min(v[j], row[j] - u[i]);
  }
  for (std::size_t i = 0; i < c.rows; ++i) {
    const double* row = c.row(i);
    double best = kInf;
    for (std::size_t j = 0; j < c.cols; ++j) best = std::min(best, row[j] - v[j]);
    u[i] = best;
  }
}

double plan_value(const std::vector<PlanEntry>& entries, const PointCloud& x, const PointCloud& y,
                  const CostSpec& cost) {
  double total = 0.0;
  for (const auto& e : entries) total += e.mass * cost.between(x[e.i].data(), y[e.j].data());
  return total;
}

}  // namespace

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::kAssignment: return "assignment";
    case SolveMethod::kNetworkSimplex: return "network-simplex";
    case SolveMethod::kBruteForce: return "brute-force";
  }
  return "?";
}

TransportPlan solve_assignment(const PointCloud& x, const PointCloud& y, const CostSpec& cost) {
  require_clouds(x, y, cost);
  if (x.size() != y.size())
    throw UsageError("assignment needs equal sample sizes, got " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  const std::size_t n = x.size();
  AssignmentSolution sol;
  if (n <= kDenseLimit) {
    const auto c = kernels::cost_matrix(x, y, cost);
    if (!kernels::all_finite(c.data)) throw NumericalError("cost matrix has non-finite entries");
    sol = solve_lap(c);
  } else {
    sol = solve_lap_lazy(x, y, cost);
  }
  TransportPlan plan;
  plan.method = SolveMethod::kAssignment;
  const double w = 1.0 / static_cast<double>(n);
  plan.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) plan.entries.push_back({i, static_cast<std::size_t>(sol.row_to_col[i]), w});
  plan.value = plan_value(plan.entries, x, y, cost);
  plan.dual_mu = std::move(sol.u);
  plan.dual_nu = std::move(sol.v);
  normalise(plan.dual_mu, plan.dual_nu);
  if (!std::isfinite(plan.value)) throw NumericalError("assignment value is not finite");
  return plan;
}

TransportPlan solve_general(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
  require_clouds(mu.points, nu.points, cost);
  mu.validate();
  nu.validate();
  const auto c = kernels::cost_matrix(mu.points, nu.points, cost);
  FlowSolution flow = solve_transport(c, mu.weights, nu.weights);
  TransportPlan plan;
  plan.method = SolveMethod::kNetworkSimplex;
  plan.entries = std::move(flow.entries);
  plan.value = plan_value(plan.entries, mu.points, nu.points, cost);
  plan.dual_mu = std::move(flow.u);
  plan.dual_nu = std::move(flow.v);
  tighten(c, plan.dual_mu, plan.dual_nu);
  normalise(plan.dual_mu, plan.dual_nu);
  return plan;
}

TransportPlan brute_force(const PointCloud& x, const PointCloud& y, const CostSpec& cost) {
  require_clouds(x, y, cost);
  const std::size_t n = x.size();
  if (n != y.size()) throw UsageError("brute force needs equal sample sizes");
  if (n > 9) throw UsageError("brute force is limited to n <= 9, got " + std::to_string(n));
  const auto c = kernels::cost_matrix_serial(x, y, cost);

  std::vector<int> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_sum = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += c(i, perm[i]);
    if (s < best_sum) {
      best_sum = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  // Column potentials as shortest paths under v_j - v_{best(i)} <= c_ij - c_{i,best(i)};
  // optimality of `best` rules out negative cycles.
  std::vector<double> v(n, 0.0);
  for (std::size_t pass = 0; pass <= n; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int k = best[i];
      for (std::size_t j = 0; j < n; ++j) {
        const double cand = v[k] + c(i, j) - c(i, k);
        if (cand < v[j] - 1e-15 * (1.0 + std::abs(v[j]))) {
          v[j] = cand;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = c(i, best[i]) - v[best[i]];

  TransportPlan plan;
  plan.method = SolveMethod::kBruteForce;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) plan.entries.push_back({i, static_cast<std::size_t>(best[i]), w});
  plan.value = plan_value(plan.entries, x, y, cost);
  plan.dual_mu = std::move(u);
  plan.dual_nu = std::move(v);
  normalise(plan.dual_mu, plan.dual_nu);
  return plan;
}

double plan_cost_under(const TransportPlan& plan, const PointCloud& x, const PointCloud& y,
                       const CostSpec& alt_cost) {
  require_clouds(x, y, alt_cost);
  for (const auto& e : plan.entries)
    if (e.i >= x.size() || e.j >= y.size()) throw UsageError("plan refers to points outside the clouds");
  return plan_value(plan.entries, x, y, alt_cost);
}

PlanCheck check_plan(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     const CostSpec& cost) {
  const std::size_t m = mu.size(), n = nu.size();
  if (plan.dual_mu.size() != m || plan.dual_nu.size() != n)
    throw UsageError("plan potentials do not match the marginals");
  PlanCheck out;
  std::vector<double> rows(m, 0.0), cols(n, 0.0);
  out.min_mass = std::numeric_limits<double>::infinity();
  for (const auto& e : plan.entries) {
    if (e.i >= m || e.j >= n) throw UsageError("plan refers to points outside the marginals");
    rows[e.i] += e.mass;
    cols[e.j] += e.mass;
    out.min_mass = std::min(out.min_mass, e.mass);
    const double cij = cost.between(mu.points[e.i].data(), nu.points[e.j].data());
    out.primal += e.mass * cij;
    out.slackness_violation =
        std::max(out.slackness_violation, std::abs(plan.dual_mu[e.i] + plan.dual_nu[e.j] - cij));
  }
  if (plan.entries.empty()) out.min_mass = 0.0;
  for (std::size_t i = 0; i < m; ++i) out.marginal_error = std::max(out.marginal_error, std::abs(rows[i] - mu.weights[i]));
  for (std::size_t j = 0; j < n; ++j) out.marginal_error = std::max(out.marginal_error, std::abs(cols[j] - nu.weights[j]));
  for (std::size_t i = 0; i < m; ++i) {
    out.dual += mu.weights[i] * plan.dual_mu[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double slack = plan.dual_mu[i] + plan.dual_nu[j] - cost.between(mu.points[i].data(), nu.points[j].data());
      out.dual_infeasibility = std::max(out.dual_infeasibility, slack);
    }
  }
  for (std::size_t j = 0; j < n; ++j) out.dual += nu.weights[j] * plan.dual_nu[j];
  out.duality_gap = std::abs(out.primal - out.dual);
  out.support_size = plan.entries.size();
  return out;
}

}  // namespace otrates
