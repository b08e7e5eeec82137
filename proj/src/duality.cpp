#include "otrates/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otrates/error.hpp"
#include "otrates/kernels.hpp"
#include "otrates/rng.hpp"

namespace otrates {

PotentialHandle::PotentialHandle(PointCloud anchors, Vec values, CostSpec cost, std::optional<double> cap)
    : anchors_(std::move(anchors)), values_(std::move(values)), cost_(std::move(cost)), cap_(cap) {
  if (anchors_.empty()) throw UsageError("potential handle needs at least one anchor");
  if (anchors_.size() != values_.size()) throw UsageError("anchor and value counts differ");
  if (anchors_.dim() != cost_.dim()) throw UsageError("anchor dimension does not match the cost");
  if (!kernels::all_finite(values_)) throw UsageError("anchor values must be finite");
}

double PotentialHandle::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cost_.dim()) throw UsageError("query dimension does not match the cost");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < values_.size(); ++j)
    best = std::min(best, cost_.between(x.data(), anchors_[j].data()) - values_[j]);
  return cap_ ? std::min(best, *cap_) : best;
}

Vec PotentialHandle::evaluate(const PointCloud& queries, int threads) const {
  Vec out(queries.size());
  kernels::min_plus(anchors_, values_, cost_, queries, out, threads);
  if (cap_)
    for (double& v : out) v = std::min(v, *cap_);
  return out;
}

Vec PotentialHandle::evaluate_serial(const PointCloud& queries) const {
  Vec out(queries.size());
  kernels::min_plus_serial(anchors_, values_, cost_, queries, out);
  if (cap_)
    for (double& v : out) v = std::min(v, *cap_);
  return out;
}

PotentialHandle c_conjugate(const PointCloud& points, const Vec& values, const CostSpec& cost) {
  return PotentialHandle(points, values, cost);
}

double potential_bound_on_ball(const PotentialHandle& f, double r) {
  if (f.size() == 0) throw UsageError("empty potential handle");
  // c >= 0 gives f >= -max lambda; any single anchor gives the upper bound.
  double hi = std::numeric_limits<double>::infinity(), lo = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    hi = std::min(hi, f.cost().sup_on_ball(r + norm2(f.anchors()[j])) - f.values()[j]);
    lo = std::max(lo, f.values()[j]);
  }
  if (f.cap()) hi = std::min(hi, *f.cap());
  return std::max(std::abs(hi), lo);
}

double double_conjugate_check(const PotentialHandle& f, const PointCloud& test_points) {
  if (test_points.empty()) return 0.0;
  PointCloud grid = f.anchors();
  grid.append(test_points);
  const Vec f_grid = f.evaluate(grid);
  const Vec fc = PotentialHandle(grid, f_grid, f.cost()).evaluate(grid);
  const Vec fcc = PotentialHandle(grid, fc, f.cost()).evaluate(test_points);
  const Vec direct = f.evaluate(test_points);
  double worst = 0.0;
  for (std::size_t t = 0; t < direct.size(); ++t) worst = std::max(worst, std::abs(fcc[t] - direct[t]));
  return worst;
}

ExtendedPotentials extend_potentials(const TransportPlan& plan, const PointCloud& x, const PointCloud& y,
                                     const CostSpec& cost, std::optional<double> cap, const PointCloud& extra) {
  if (plan.dual_mu.size() != x.size() || plan.dual_nu.size() != y.size())
    throw UsageError("plan potentials do not match the supports");
  if (!extra.empty() && extra.dim() != cost.dim()) throw UsageError("extra points do not match the cost dimension");

  // Marginal weights are read off the plan so general plans work too.
  Vec a(x.size(), 0.0), b(y.size(), 0.0);
  for (const auto& e : plan.entries) {
    a.at(e.i) += e.mass;
    b.at(e.j) += e.mass;
  }
  double dual = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dual += a[i] * plan.dual_mu[i];
  for (std::size_t j = 0; j < y.size(); ++j) dual += b[j] * plan.dual_nu[j];
  if (std::abs(dual - plan.value) > 1e-8 * (1.0 + std::abs(plan.value)))
    throw NumericalError("duals do not certify the plan: gap " + std::to_string(std::abs(dual - plan.value)));

  // Placeholders; replaced once the cap is known.
  const PotentialHandle blank(x, Vec(x.size(), 0.0), cost);
  ExtendedPotentials out{blank, blank, blank, 0.0, 0.0, {}, {}, {}};
  out.shift = *std::max_element(plan.dual_mu.begin(), plan.dual_mu.end());
  out.f.resize(x.size());
  out.g.resize(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.f[i] = plan.dual_mu[i] - out.shift;
  for (std::size_t j = 0; j < y.size(); ++j) out.g[j] = plan.dual_nu[j] + out.shift;

  out.universe = x;
  out.universe.append(y);
  if (!extra.empty()) out.universe.append(extra);

  const auto pair_costs = kernels::cost_matrix(x, y, cost);
  const double max_pair = *std::max_element(pair_costs.data.begin(), pair_costs.data.end());
  if (cap) {
    if (*cap < max_pair)
      throw UsageError("cap " + std::to_string(*cap) + " is below the largest support cost " + std::to_string(max_pair));
    out.cap = *cap;
  } else {
    double radius = 0.0;
    for (std::size_t u = 0; u < out.universe.size(); ++u) radius = std::max(radius, norm2(out.universe[u]));
    const auto& meta = cost.meta();
    out.cap = std::max({meta.kappa * std::pow(2.0 * radius, meta.growth_p), cost.sup_on_ball(2.0 * radius), max_pair});
  }

  out.eta = PotentialHandle(x, out.f, cost, out.cap);
  const Vec eta_u = out.eta.evaluate(out.universe);
  out.phi = PotentialHandle(out.universe, eta_u, cost);
  const Vec phi_u = out.phi.evaluate(out.universe);
  out.psi = PotentialHandle(out.universe, phi_u, cost);
  return out;
}

std::vector<std::size_t> superdifferential_probe(const PotentialHandle& f, std::span<const double> x, double tol) {
  if (static_cast<int>(x.size()) != f.cost().dim()) throw UsageError("probe point dimension does not match the cost");
  const auto& anchors = f.anchors();
  const auto& values = f.values();
  Vec score(values.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < values.size(); ++j) {
    score[j] = f.cost().between(x.data(), anchors[j].data()) - values[j];
    best = std::min(best, score[j]);
  }
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < values.size(); ++j)
    if (score[j] <= best + tol) hits.push_back(j);
  return hits;
}

CycleCheck cyclical_monotonicity_check(const PointCloud& xs, const PointCloud& ys, const CostSpec& cost, int max_len,
                                       std::int64_t trials, std::uint64_t seed) {
  if (max_len < 2) throw UsageError("cycle length must be at least 2");
  if (xs.size() != ys.size()) throw UsageError("pair lists differ in length");
  if (trials < 0) throw UsageError("trial count must be nonnegative");
  CycleCheck out;
  out.trials = trials;
  const std::size_t count = xs.size();
  if (count < 2) return out;
  CounterRng rng(derive_seed({seed, 0x6379636cull}));
  std::vector<std::size_t> pool(count), idx;
  for (std::size_t t = 0; t < count; ++t) pool[t] = t;
  const std::size_t longest = std::min<std::size_t>(static_cast<std::size_t>(max_len), count);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    const std::size_t len = 2 + rng.below(longest - 1);
    for (std::size_t k = 0; k < len; ++k) std::swap(pool[k], pool[k + rng.below(count - k)]);
    idx.assign(pool.begin(), pool.begin() + len);
    double base = 0.0;
    for (std::size_t k = 0; k < len; ++k) base += cost.between(xs[idx[k]].data(), ys[idx[k]].data());
    for (std::size_t s = 1; s < len; ++s) {
      double shifted = 0.0;
      for (std::size_t k = 0; k < len; ++k) shifted += cost.between(xs[idx[(k + s) % len]].data(), ys[idx[k]].data());
      const double v = base - shifted;
      if (v > out.max_violation) {
        out.max_violation = v;
        out.witness = idx;
        out.witness_shift = static_cast<int>(s);
      }
    }
  }
  return out;
}

std::pair<PointCloud, PointCloud> support_pairs(const TransportPlan& plan, const PointCloud& x, const PointCloud& y) {
  PointCloud xs(x.dim(), 0), ys(y.dim(), 0);
  for (const auto& e : plan.entries) {
    if (e.mass <= 0.0) continue;
    if (e.i >= x.size() || e.j >= y.size()) throw UsageError("plan refers to points outside the clouds");
    xs.push_back(x[e.i]);
    ys.push_back(y[e.j]);
  }
  return {std::move(xs), std::move(ys)};
}

}  // namespace otrates
