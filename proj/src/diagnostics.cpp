#include "otrates/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "otrates/error.hpp"
#include "otrates/rng.hpp"

namespace otrates {

nlohmann::json DiagnosticReport::to_json() const {
  return {{"name", name},           {"pass", pass},       {"max_violation", max_violation},
          {"tolerance", tolerance}, {"samples_used", samples_used}, {"witness", witness}};
}

DiagnosticReport DiagnosticReport::from_json(const nlohmann::json& j) {
  DiagnosticReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.pass = j.at("pass").get<bool>();
    r.max_violation = j.at("max_violation").get<double>();
    r.tolerance = j.at("tolerance").get<double>();
    r.samples_used = j.at("samples_used").get<std::int64_t>();
    r.witness = j.value("witness", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed diagnostic report: ") + e.what());
  }
  return r;
}

std::string DiagnosticReport::to_line() const { return to_json().dump(); }

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

SemiconcavityReport semiconcavity_check(const PotentialHandle& phi, double lambda, const Region& region,
                                        std::int64_t triples, std::uint64_t seed, int threads) {
  if (triples < 1) throw UsageError("semiconcavity check needs at least one triple");
  if (!(lambda >= 0.0)) throw UsageError("lambda must be nonnegative");
  const int d = phi.cost().dim();
  if (static_cast<int>(region.center.size()) != d) throw UsageError("region dimension does not match the potential");

  CounterRng rng(derive_seed({seed, 0x73656d69ull}));
  const auto count = static_cast<std::size_t>(triples);
  PointCloud a(d, count), b(d, count), mid(d, count);
  for (std::size_t t = 0; t < count; ++t) {
    const Vec p = region.draw(rng), q = region.draw(rng);
    for (int k = 0; k < d; ++k) {
      a[t][k] = p[k];
      b[t][k] = q[k];
      mid[t][k] = 0.5 * (p[k] + q[k]);
    }
  }
  const Vec fa = phi.evaluate(a, threads), fb = phi.evaluate(b, threads), fm = phi.evaluate(mid, threads);

  SemiconcavityReport out;
  out.midpoint.name = "semiconcavity.midpoint";
  out.midpoint.tolerance = 1e-8;
  out.lipschitz.name = "semiconcavity.lipschitz";
  out.lipschitz.tolerance = 1e-6;
  out.midpoint.samples_used = out.lipschitz.samples_used = triples;

  double worst_mid = 0.0, worst_ratio = 0.0;
  std::size_t at_mid = 0, at_ratio = 0;
  for (std::size_t t = 0; t < count; ++t) {
    const double ga = fa[t] - 0.5 * lambda * squared_norm(a[t]);
    const double gb = fb[t] - 0.5 * lambda * squared_norm(b[t]);
    const double gm = fm[t] - 0.5 * lambda * squared_norm(mid[t]);
    const double v = 0.5 * (ga + gb) - gm;
    if (v > worst_mid) {
      worst_mid = v;
      at_mid = t;
    }
    double sq = 0.0;
    for (int k = 0; k < d; ++k) sq += (a[t][k] - b[t][k]) * (a[t][k] - b[t][k]);
    if (sq == 0.0) continue;
    const double ratio = std::abs(ga - gb) / std::sqrt(sq);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      at_ratio = t;
    }
  }
  const auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  out.midpoint.max_violation = worst_mid;
  out.midpoint.pass = worst_mid <= out.midpoint.tolerance;
  out.midpoint.witness = {{"x", vec(a[at_mid])}, {"x_prime", vec(b[at_mid])}, {"lambda", lambda}};
  out.lipschitz.max_violation = std::max(0.0, worst_ratio - 2.0 * lambda);
  out.lipschitz.pass = out.lipschitz.max_violation <= out.lipschitz.tolerance;
  out.lipschitz.witness = {
      {"x", vec(a[at_ratio])}, {"x_prime", vec(b[at_ratio])}, {"max_ratio", worst_ratio}, {"bound", 2.0 * lambda}};
  return out;
}

DisplacementProfile displacement_profile(const TransportPlan& plan, const PointCloud& x, const PointCloud& y) {
  if (plan.entries.empty()) throw UsageError("displacement profile needs a nonempty plan");
  std::vector<double> ratios;
  for (const auto& e : plan.entries) {
    if (e.mass <= 0.0) continue;
    if (e.i >= x.size() || e.j >= y.size()) throw UsageError("plan refers to points outside the clouds");
    ratios.push_back(norm2(y[e.j]) / (norm2(x[e.i]) + 1.0));
  }
  if (ratios.empty()) throw UsageError("plan has no positive-mass entries");
  std::sort(ratios.begin(), ratios.end());
  DisplacementProfile out;
  out.max_ratio = ratios.back();
  out.entries = ratios.size();
  for (int k = 0; k <= 10; ++k) out.deciles.push_back(quantile_sorted(ratios, k / 10.0));
  return out;
}

double superdiff_default_tolerance(double growth_p, double kappa) {
  return std::pow(2.0, std::max(growth_p - 2.0, 0.0)) * (2.0 + std::pow(2.0, growth_p - 1.0) * kappa);
}

DiagnosticReport superdiff_growth_check(const PotentialHandle& phi, double r, double bound_R, double growth_p,
                                        double kappa, const SuperdiffOptions& opts) {
  if (!(r >= 4.0) || !(bound_R >= 4.0))
    throw UsageError("superdifferential growth bound is stated for r >= 4 and R >= 4; got r=" + std::to_string(r) +
                     ", R=" + std::to_string(bound_R));
  if (opts.probes < 1) throw UsageError("superdiff check needs at least one probe");
  const int d = phi.cost().dim();
  const Vec origin(d, 0.0);
  DiagnosticReport rep;
  rep.name = "superdiff";
  rep.tolerance = opts.tolerance > 0.0 ? opts.tolerance : superdiff_default_tolerance(growth_p, kappa);

  // Precondition |phi| <= R on B(0, r).
  CounterRng rng(derive_seed({opts.seed, 0x73757064ull}));
  const auto n = static_cast<std::size_t>(opts.probes);
  PointCloud outer(d, n);
  const Region big = Region::ball(origin, r);
  for (std::size_t t = 0; t < n; ++t) {
    const Vec z = big.draw(rng);
    std::copy(z.begin(), z.end(), outer[t].begin());
  }
  const Vec vals = phi.evaluate(outer);
  std::size_t worst = 0;
  for (std::size_t t = 1; t < n; ++t)
    if (std::abs(vals[t]) > std::abs(vals[worst])) worst = t;
  rep.samples_used = opts.probes;
  if (std::abs(vals[worst]) > bound_R) {
    rep.pass = false;
    rep.max_violation = std::abs(vals[worst]) - bound_R;
    rep.witness = {{"precondition", "|phi| <= R on B(0,r)"},
                   {"x", std::vector<double>(outer[worst].begin(), outer[worst].end())},
                   {"phi", vals[worst]},
                   {"R", bound_R}};
    return rep;
  }

  const double denom = std::pow(r, growth_p - 1.0) + bound_R;
  nlohmann::json nested = nlohmann::json::array();
  double stat = 0.0;
  Vec stat_x, stat_y;
  for (double frac : {0.125, 0.25, 0.5}) {
    const Region ball = Region::ball(origin, frac * r);
    double local = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const Vec z = ball.draw(rng);
      for (std::size_t j : superdifferential_probe(phi, z, opts.tie_tol)) {
        const double v = std::pow(norm2(phi.anchors()[j]), growth_p - 1.0) / denom;
        if (v > local) local = v;
        if (v > stat && frac == 0.5) {
          stat = v;
          stat_x = z;
          stat_y.assign(phi.anchors()[j].begin(), phi.anchors()[j].end());
        }
      }
    }
    nested.push_back({{"radius", frac * r}, {"statistic", local}});
  }
  rep.samples_used += 3 * opts.probes;
  rep.max_violation = stat;
  rep.pass = stat <= rep.tolerance;
  rep.witness = {{"nested", nested}, {"max_abs_phi", std::abs(vals[worst])}};
  if (!stat_x.empty()) {
    rep.witness["x"] = stat_x;
    rep.witness["y"] = stat_y;
  }
  return rep;
}

}  // namespace otrates
