#include "otrates/lowerbounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "otrates/error.hpp"
#include "otrates/io.hpp"
#include "otrates/measures.hpp"
#include "otrates/rng.hpp"
#include "otrates/solver.hpp"

namespace otrates {

namespace {

// Visits lattice nodes inside the ball in lexicographic index order until
// `visit` returns false. Returns the number of nodes visited.
template <class Visit>
std::size_t scan_lattice(const Vec& center, double radius, int k, Visit&& visit) {
  const int d = static_cast<int>(center.size());
  const double pitch = 2.0 * radius / k;
  std::vector<int> idx(d, 0);
  Vec p(d);
  std::size_t count = 0;
  while (true) {
    double sq = 0.0;
    for (int a = 0; a < d; ++a) {
      const double off = -radius + pitch * (idx[a] + 0.5);
      p[a] = center[a] + off;
      sq += off * off;
    }
    if (sq <= radius * radius) {
      ++count;
      if (!visit(p)) return count;
    }
    int a = d - 1;
    while (a >= 0 && ++idx[a] == k) idx[a--] = 0;
    if (a < 0) return count;
  }
}

}  // namespace

PackingSet packing_set(const Vec& center, double radius, std::size_t m) {
  if (m < 1) throw UsageError("packing set needs m >= 1");
  if (center.empty()) throw UsageError("packing set needs a nonempty centre");
  if (!(radius > 0.0)) throw UsageError("packing radius must be positive");
  const int d = static_cast<int>(center.size());
  int k = 1;
  while (scan_lattice(center, radius, k, [](const Vec&) { return true; }) < m) {
    ++k;
    if (std::pow(static_cast<double>(k), d) > 5e8) throw UsageError("packing set too large for this dimension");
  }
  PackingSet out;
  out.center = center;
  out.radius = radius;
  out.lattice_k = k;
  out.separation = 2.0 * radius / k;
  out.grid_constant = out.separation * std::pow(static_cast<double>(m), 1.0 / d);
  out.points = PointCloud(d, 0);
  scan_lattice(center, radius, k, [&](const Vec& p) {
    out.points.push_back(p);
    return out.points.size() < m;
  });
  return out;
}

Divergences divergences(const std::vector<double>& q, std::size_t m) {
  if (m < 1 || q.size() != m) throw UsageError("q must have exactly m entries");
  double total = 0.0;
  for (double v : q) {
    if (!(v >= 0.0)) throw UsageError("q entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw UsageError("q must sum to 1");
  const double u = 1.0 / static_cast<double>(m);
  Divergences out;
  for (double v : q) {
    out.tv += std::abs(v - u);
    out.chi2 += (v - u) * (v - u);
  }
  out.tv *= 0.5;
  out.chi2 *= static_cast<double>(m);
  return out;
}

QFamily QFamily::parse(std::string_view text) {
  text = trim(text);
  QFamily f;
  if (text == "uniform") return f;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw UsageError("q family '" + std::string(text) + "': expected uniform, split:<tv>, spike:<mass> or dirichlet:<alpha>");
  const std::string_view name = trim(text.substr(0, colon));
  f.param = parse_double(text.substr(colon + 1));
  if (name == "split") {
    f.kind = Kind::kSplit;
    if (!(f.param >= 0.0 && f.param <= 0.5)) throw UsageError("split tv must lie in [0, 0.5]");
  } else if (name == "spike") {
    f.kind = Kind::kSpike;
    if (!(f.param >= 0.0 && f.param <= 1.0)) throw UsageError("spike mass must lie in [0, 1]");
  } else if (name == "dirichlet") {
    f.kind = Kind::kDirichlet;
    if (!(f.param > 0.0)) throw UsageError("dirichlet alpha must be positive");
  } else {
    throw UsageError("unknown q family '" + std::string(name) + "'");
  }
  return f;
}

std::string QFamily::to_string() const {
  switch (kind) {
    case Kind::kUniform: return "uniform";
    case Kind::kSplit: return "split:" + format_double(param);
    case Kind::kSpike: return "spike:" + format_double(param);
    case Kind::kDirichlet: return "dirichlet:" + format_double(param);
  }
  return "?";
}

std::vector<double> QFamily::make(std::size_t m, std::uint64_t seed) const {
  if (m < 1) throw UsageError("q needs m >= 1");
  const double u = 1.0 / static_cast<double>(m);
  std::vector<double> q(m, u);
  switch (kind) {
    case Kind::kUniform: break;
    case Kind::kSplit: {
      // First half gains tv in total, the rest loses it.
      if (m < 2) break;
      const std::size_t up = m / 2, down = m - up;
      if (param / static_cast<double>(down) > u) throw UsageError("split tv too large for this m");
      for (std::size_t j = 0; j < m; ++j)
        q[j] = j < up ? u + param / static_cast<double>(up) : u - param / static_cast<double>(down);
      break;
    }
    case Kind::kSpike:
      for (std::size_t j = 0; j < m; ++j) q[j] = (1.0 - param) * u + (j == 0 ? param : 0.0);
      break;
    case Kind::kDirichlet: {
      CounterRng rng(derive_seed({seed, m, 0x64697269ull}));
      std::gamma_distribution<double> gamma(param, 1.0);
      double total = 0.0;
      for (double& v : q) total += (v = gamma(rng));
      if (!(total > 0.0)) {
        std::fill(q.begin(), q.end(), u);
      } else {
        for (double& v : q) v /= total;
      }
      break;
    }
  }
  return q;
}

GadgetResult minimax_gadget(std::size_t m, const std::vector<double>& q, const Vec& z0, const CostSpec& cost,
                            std::uint64_t seed, const GadgetGeometry& geometry) {
  const int d = cost.dim();
  if (static_cast<int>(z0.size()) != d) throw UsageError("z0 dimension does not match the cost");
  const Divergences div = divergences(q, m);
  const Vec center = geometry.center.empty() ? Vec(d, 0.0) : geometry.center;
  if (static_cast<int>(center.size()) != d) throw UsageError("packing centre dimension does not match the cost");
  const PackingSet pack = packing_set(center, geometry.radius, m);

  // Seeded Fisher-Yates: F(j) = pack[perm[j]].
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(derive_seed({seed, m, 0x67616467ull}));
  for (std::size_t j = m; j > 1; --j) std::swap(perm[j - 1], perm[rng.below(j)]);

  DiscreteMeasure src{PointCloud(d, m), q};
  DiscreteMeasure dst{PointCloud(d, m), std::vector<double>(m, 1.0 / static_cast<double>(m))};
  Vec shift(d, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto p = pack.points[perm[j]];
    for (int a = 0; a < d; ++a) {
      src.points[j][a] = p[a];
      dst.points[j][a] = p[a] + z0[a];
      // mean of target minus mean of source
      shift[a] += (dst.weights[j] - q[j]) * p[a];
    }
  }
  for (int a = 0; a < d; ++a) shift[a] += z0[a];

  const TransportPlan plan = solve_general(src, dst, cost);
  GadgetResult out;
  out.m = m;
  out.q = q;
  out.tv = div.tv;
  out.chi2 = div.chi2;
  out.value = plan.value;
  out.h_z0 = cost.h(z0);
  out.value_minus_h = plan.value - out.h_z0;
  out.jensen_gap = plan.value - cost.h(shift);
  out.seed = seed;
  out.separation = pack.separation;
  return out;
}

}  // namespace otrates
