// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all twelve)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "otrates/diagnostics.hpp"
#include "otrates/duality.hpp"
#include "otrates/io.hpp"
#include "otrates/lowerbounds.hpp"
#include "otrates/measures.hpp"
#include "otrates/rates.hpp"
#include "otrates/solver.hpp"

using namespace otrates;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Worst certificate seen by any solve so far, per criterion.
struct Certificates {
  std::map<int, std::pair<double, double>> worst;  // criterion -> (rel gap, infeasibility)
  void add(int crit, double rel_gap, double infeas) {
    auto& w = worst[crit];
    w.first = std::max(w.first, rel_gap);
    w.second = std::max(w.second, infeas);
  }
  void add(int crit, const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
           const CostSpec& cost) {
    const PlanCheck chk = check_plan(plan, mu, nu, cost);
    add(crit, chk.duality_gap / (1.0 + std::abs(plan.value)), chk.dual_infeasibility);
  }
};

Certificates certs;

Vec along_diagonal(int d, double norm) { return Vec(d, norm / std::sqrt(static_cast<double>(d))); }

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

const std::vector<std::size_t> kGrid{128, 256, 512, 1024, 2048};
constexpr int kReps = 100;
constexpr int kBoot = 1000;

ExperimentConfig rate_config(GroundTruthPair pair, std::uint64_t seed, int threads) {
  ExperimentConfig ex;
  ex.pair = std::move(pair);
  ex.n_grid = kGrid;
  ex.reps = kReps;
  ex.master_seed = seed;
  ex.threads = threads;
  return ex;
}

ExperimentConfig compact_quadratic(int threads) {
  const auto mu = uniform_ball(Vec(5, 0.0), 0.25);
  return rate_config(ground_truth_location(mu, along_diagonal(5, 0.5), CostSpec::power_lr(2, 2, 5)), 1, threads);
}

RateReport run_rates(int crit, const ExperimentConfig& ex) {
  RateReport r = fit_slope(estimate_delta(ex), kBoot, ex.master_seed);
  certs.add(crit, r.max_rel_gap, r.max_dual_infeasibility);
  return r;
}

std::string rate_detail(const RateReport& r) {
  std::string s = "slope=" + fmt(*r.slope) + " ci=[" + fmt(r.slope_ci->first) + ", " + fmt(r.slope_ci->second) + "]";
  s += " delta_hat:";
  for (const auto& row : r.per_n) s += " " + fmt(row.delta_hat, 3);
  return s;
}

std::string crit5_samples;

// ---------------------------------------------------------------------------

Outcome c1_exactness() {
  const std::vector<std::function<CostSpec(int)>> costs = {
      [](int d) { return CostSpec::power_lr(2, 2, d); }, [](int d) { return CostSpec::power_lr(1, 2, d); },
      [](int d) { return CostSpec::power_lr(3, 1, d); }, [](int d) { return CostSpec::smooth_power(1.5, 1e-2, d); }};
  double worst_lib = 0.0, worst_perm = 0.0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 7;
    const int d = 1 + static_cast<int>((t / 7) % 6);
    const CostSpec c = costs[t % 4](d);
    const auto x = oracle::random_cloud(d, n, derive_seed({1, t, 0})), y = oracle::random_cloud(d, n, derive_seed({1, t, 1}));
    const auto plan = solve_assignment(x, y, c);
    worst_lib = std::max(worst_lib, rel_diff(plan.value, brute_force(x, y, c).value));
    worst_perm = std::max(worst_perm, rel_diff(plan.value, oracle::permutation_min(x, y, c)));
    certs.add(1, plan, DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y), c);
  }
  Outcome o;
  o.pass = worst_lib <= 1e-9 && worst_perm <= 1e-9;
  o.detail = "200 instances, max rel diff vs brute_force " + fmt(worst_lib) + ", vs permutation oracle " + fmt(worst_perm);
  return o;
}

Outcome c2_comonotone() {
  const std::vector<CostSpec> costs = {CostSpec::power_lr(1, 2, 1), CostSpec::power_lr(1.5, 2, 1),
                                       CostSpec::power_lr(2, 2, 1), CostSpec::power_lr(3, 2, 1),
                                       CostSpec::smooth_power(1.5, 1e-2, 1), CostSpec::smooth_power(3, 0.1, 1)};
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(derive_seed({2, t}));
    const std::size_t m = 1 + rng.below(512), n = 1 + rng.below(512);
    const auto mu = oracle::random_measure(1, m, derive_seed({2, t, 0}));
    const auto nu = oracle::random_measure(1, n, derive_seed({2, t, 1}));
    const CostSpec& c = costs[t % costs.size()];
    const auto plan = solve_general(mu, nu, c);
    worst = std::max(worst, rel_diff(plan.value, oracle::sorted_coupling(mu, nu, c)));
    certs.add(2, plan, mu, nu, c);
  }
  Outcome o;
  o.pass = worst <= 1e-9;
  o.detail = "100 weighted 1-d instances, max rel diff vs sorted coupling " + fmt(worst);
  return o;
}

Outcome c3_duality() {
  Outcome o;
  o.pass = true;
  for (int crit : {1, 2, 5, 6, 7}) {
    const auto it = certs.worst.find(crit);
    if (it == certs.worst.end()) {
      o.pass = false;
      o.detail += " [" + std::to_string(crit) + ": not run]";
      continue;
    }
    const auto [gap, inf] = it->second;
    o.pass = o.pass && gap <= 1e-8 && inf <= 1e-9;
    o.detail += " [" + std::to_string(crit) + ": gap " + fmt(gap, 2) + ", infeas " + fmt(inf, 2) + "]";
  }
  o.detail = "worst relative gap / dual infeasibility:" + o.detail + " (criterion 8 has no solves)";
  return o;
}

double extension_violation(const TransportPlan& plan, const PointCloud& x, const PointCloud& y, const CostSpec& c,
                           const PointCloud& extra) {
  const auto ext = extend_potentials(plan, x, y, c, std::nullopt, extra);
  const auto& U = ext.universe;
  const std::size_t n = x.size();
  const Vec phi = ext.phi.evaluate(U), psi = ext.psi.evaluate(U);
  double v = 0.0;
  for (std::size_t a = 0; a < U.size(); ++a)
    for (std::size_t b = 0; b < U.size(); ++b) v = std::max(v, phi[a] + psi[b] - c(U[a], U[b]));  // (i)
  for (std::size_t i = 0; i < n; ++i) v = std::max(v, std::abs(phi[i] - ext.f[i]));                 // (ii)
  for (std::size_t j = 0; j < y.size(); ++j) v = std::max(v, std::abs(psi[n + j] - ext.g[j]));
  for (std::size_t u = 0; u < U.size(); ++u)                                                      // (iii)
    v = std::max(v, std::max(std::abs(phi[u]), std::abs(psi[u])) - ext.cap);
  for (const auto& e : plan.entries) {                                                            // (iv)
    v = std::max(v, std::abs(phi[e.i] + psi[n + e.j] - c(x[e.i], y[e.j])));
    const auto fx = superdifferential_probe(ext.phi, x[e.i], 1e-9);
    const auto fy = superdifferential_probe(ext.psi, y[e.j], 1e-9);
    if (std::find(fx.begin(), fx.end(), n + e.j) == fx.end()) v = std::max(v, 1.0);
    if (std::find(fy.begin(), fy.end(), e.i) == fy.end()) v = std::max(v, 1.0);
  }
  return v;
}

Outcome c4_ctransform() {
  const std::vector<std::function<CostSpec(int)>> costs = {
      [](int d) { return CostSpec::power_lr(2, 2, d); }, [](int d) { return CostSpec::power_lr(3, 2, d); },
      [](int d) { return CostSpec::smooth_power(1.5, 1e-2, d); }, [](int d) { return CostSpec::power_lr(1.5, 3, d); }};
  double worst_cc = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const int d = 1 + static_cast<int>(t % 5);
    CounterRng rng(derive_seed({4, t}));
    const std::size_t k = 5 + rng.below(40);
    const auto anchors = oracle::random_cloud(d, k, derive_seed({4, t, 0}));
    Vec vals(k);
    for (double& v : vals) v = rng.uniform(-1, 1);
    const PotentialHandle f(anchors, vals, costs[t % 4](d));
    worst_cc = std::max(worst_cc, double_conjugate_check(f, oracle::random_cloud(d, 100, derive_seed({4, t, 1}), -2, 2)));
  }
  double worst_ext = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const int d = 1 + static_cast<int>(t % 5);
    const std::size_t n = 8 + t % 40;
    const CostSpec c = costs[t % 3](d);
    const auto x = oracle::random_cloud(d, n, derive_seed({4, 100 + t, 0}));
    const auto y = oracle::random_cloud(d, n, derive_seed({4, 100 + t, 1}), -0.5, 1.5);
    const auto plan = solve_assignment(x, y, c);
    worst_ext = std::max(worst_ext, extension_violation(plan, x, y, c, oracle::random_cloud(d, 20, derive_seed({4, 100 + t, 2}), -3, 3)));
  }
  Outcome o;
  o.pass = worst_cc <= 1e-9 && worst_ext <= 1e-9;
  o.detail = "max |f^cc - f| " + fmt(worst_cc) + " over 100 handles x 100 points; max extension clause violation " +
             fmt(worst_ext) + " over 50 plans";
  return o;
}

Outcome c5_compact() {
  const RateReport r = run_rates(5, compact_quadratic(8));
  crit5_samples = samples_csv(r);
  Outcome o;
  o.pass = *r.slope <= -0.30 && r.slope_ci->second < -0.20;
  o.detail = rate_detail(r) + " (need slope <= -0.30, ci_hi < -0.20)";
  return o;
}

Outcome c6_dichotomy() {
  const CostSpec c1 = CostSpec::power_lr(1, 2, 5);
  const auto ball = uniform_ball(Vec(5, 0.0), 0.25);
  const RateReport a = run_rates(6, rate_config(ground_truth_location(ball, along_diagonal(5, 1.0), c1), 2, 8));
  const RateReport b = run_rates(6, rate_config(ground_truth_identical(ball, c1), 3, 8));
  const RegimeComparison cmp = compare_regimes(a, b, kBoot, 6);
  Outcome o;
  const bool ok_a = *a.slope <= -0.30, ok_b = *b.slope >= -0.28 && *b.slope <= -0.12;
  const bool ok_cmp = cmp.ci_lo > 0.0 || cmp.ci_hi < 0.0;
  o.pass = ok_a && ok_b && ok_cmp;
  o.detail = "(a) disjoint " + rate_detail(a) + "; (b) identical " + rate_detail(b) + "; difference " +
             fmt(cmp.difference) + " ci=[" + fmt(cmp.ci_lo) + ", " + fmt(cmp.ci_hi) + "]";
  return o;
}

GroundTruthPair gaussian_pair() {
  return ground_truth_location(gaussian(Vec(5, 0.0), Matrix::identity(5)), along_diagonal(5, 1.0),
                               CostSpec::power_lr(2, 2, 5));
}

Outcome c7_unbounded() {
  const auto pair = gaussian_pair();
  const RateReport r = run_rates(7, rate_config(pair, 4, 8));
  Outcome o;
  o.pass = std::abs(pair.exact_value - 1.0) <= 1e-12 && *r.slope <= -0.30;
  o.detail = "exact_value=" + fmt(pair.exact_value, 17) + " " + rate_detail(r) + " (need slope <= -0.30)";
  return o;
}

Outcome c8_surrogate() {
  Outcome o;
  o.pass = true;
  const int d = 5;
  const Region ball = Region::ball(Vec(d, 0.0), 5.0);
  for (double p : {1.5, 3.0})
    for (double eps : {1e-2, 1e-4}) {
      const CostSpec s = smooth_approx(p, eps, d), exact = CostSpec::power_lr(p, 2, d);
      CounterRng rng(derive_seed({8, static_cast<std::uint64_t>(p * 10), static_cast<std::uint64_t>(-std::log10(eps))}));
      double err = 0.0, grad_rel = 0.0;
      for (int t = 0; t < 10000; ++t) {
        const Vec z = ball.draw(rng);
        err = std::max(err, std::abs(s.h(z) - exact.h(z)));
        const Vec g = s.grad(z);
        const Vec fd = oracle::fd_gradient([&](const Vec& w) { return s.h(w); }, z, 1e-6 * std::max(1.0, norm2(z)));
        double num = 0.0;
        for (int k = 0; k < d; ++k) num = std::max(num, std::abs(g[k] - fd[k]));
        double den = 0.0;
        for (double v : g) den = std::max(den, std::abs(v));
        grad_rel = std::max(grad_rel, num / std::max(den, 1e-300));
      }
      const bool ok = err <= 2 * eps && grad_rel <= 1e-5;
      o.pass = o.pass && ok;
      o.detail += " [p=" + fmt(p) + " eps=" + fmt(eps) + ": sup err " + fmt(err, 3) + ", grad rel " + fmt(grad_rel, 3) + "]";
    }
  // for the record: the raw formula at p = 3
  const CostSpec raw = CostSpec::smooth_power(3, 1e-2, d);
  o.detail += " (raw (|z|^2+eps^(2/p))^(p/2)-eps at p=3, eps=1e-2, |z|=5 misses by " +
              fmt(raw.h(Vec{5, 0, 0, 0, 0}) - 125.0, 3) + ")";
  return o;
}

Outcome c9_semiconcavity() {
  const auto ex = compact_quadratic(0);
  const CostSpec& c = ex.pair.cost;
  const double lambda = c.lambda_on_ball(2.0);
  const Region region = Region::box(Vec(5, 0.0), 1.0 / std::sqrt(5.0));
  double mid = 0.0, lip = 0.0;
  bool pass = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto mu = sample(ex.pair.mu, 256, derive_seed({9, s, 0}));
    const auto nu = sample(ex.pair.nu, 256, derive_seed({9, s, 1}));
    const auto plan = solve_assignment(mu.points, nu.points, c);
    certs.add(9, plan, mu, nu, c);
    const PotentialHandle phi(nu.points, plan.dual_nu, c);
    const auto rep = semiconcavity_check(phi, lambda, region, 10000, derive_seed({9, s, 2}));
    mid = std::max(mid, rep.midpoint.max_violation);
    lip = std::max(lip, rep.lipschitz.max_violation);
    pass = pass && rep.midpoint.max_violation <= 1e-8 && rep.lipschitz.max_violation <= 1e-6;
  }
  Outcome o;
  o.pass = pass;
  o.detail = "20 plans, Lambda=" + fmt(lambda) + ", max midpoint violation " + fmt(mid) +
             ", max excess of Lipschitz ratio over 2 Lambda " + fmt(lip);
  return o;
}

Outcome c10_displacement() {
  const auto pair = gaussian_pair();
  std::vector<double> med;
  std::string detail;
  for (std::size_t n : {128u, 512u, 2048u}) {
    std::vector<double> ratios;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto mu = sample(pair.mu, n, derive_seed({10, n, s, 0}));
      const auto nu = sample(pair.nu, n, derive_seed({10, n, s, 1}));
      const auto plan = solve_assignment(mu.points, nu.points, pair.cost);
      certs.add(10, plan, mu, nu, pair.cost);
      ratios.push_back(displacement_profile(plan, mu.points, nu.points).max_ratio);
    }
    std::sort(ratios.begin(), ratios.end());
    med.push_back(0.5 * (ratios[9] + ratios[10]));
    detail += " n=" + std::to_string(n) + ":" + fmt(med.back());
  }
  Outcome o;
  o.pass = med.back() <= 2.0 * med.front();
  o.detail = "median max |y|/(|x|+1):" + detail + " (need last <= 2 x first)";
  return o;
}

Outcome c11_gadget() {
  const int d = 5;
  const std::vector<CostSpec> families = {CostSpec::power_lr(2, 2, d), CostSpec::power_lr(1, 2, d),
                                          CostSpec::power_lr(3, 1, d), CostSpec::smooth_power(1.5, 1e-2, d)};
  double worst_uniform = 0.0, min_vmh = INFINITY, min_jensen = INFINITY;
  int negative_shifted = 0;
  for (const auto& c : families)
    for (std::uint64_t s = 0; s < 20; ++s)
      for (const Vec& z0 : {Vec(d, 0.0), along_diagonal(d, 0.3)}) {
        const auto r = minimax_gadget(64, std::vector<double>(64, 1.0 / 64), z0, c, s);
        worst_uniform = std::max(worst_uniform, std::abs(r.value_minus_h));
        min_vmh = std::min(min_vmh, r.value_minus_h);
      }
  const auto split = QFamily::parse("split:0.25");
  const CostSpec c2 = families[0];
  std::vector<double> lm, lv;
  std::string per_m;
  for (std::size_t m : {32u, 64u, 128u, 256u, 512u}) {
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto q = split.make(m, s);
      const auto r = minimax_gadget(m, q, Vec(d, 0.0), c2, s);
      min_vmh = std::min(min_vmh, r.value_minus_h);
      mean += r.value_minus_h / 20.0;
      // shifted copies: only the Jensen form of the lower bound is claimed
      const auto sh = minimax_gadget(m, q, along_diagonal(d, 0.3), c2, s);
      min_jensen = std::min(min_jensen, sh.jensen_gap);
      negative_shifted += sh.value_minus_h < -1e-10;
    }
    lm.push_back(std::log(static_cast<double>(m)));
    lv.push_back(std::log(mean));
    per_m += " m=" + std::to_string(m) + ":" + fmt(mean, 3);
  }
  const double slope = ols_slope(lm, lv);
  Outcome o;
  o.pass = worst_uniform <= 1e-10 && min_vmh >= -1e-10 && slope >= -0.6 && slope <= -0.2 && min_jensen >= -1e-10;
  o.detail = "q=u max |value-h| " + fmt(worst_uniform) + "; min value_minus_h " + fmt(min_vmh) + "; TV=1/4 slope " +
             fmt(slope) + " (" + per_m + " ); shifted z0: min Jensen gap " + fmt(min_jensen) + ", " +
             std::to_string(negative_shifted) + " negative value_minus_h (not claimed)";
  return o;
}

Outcome c12_determinism() {
  if (crit5_samples.empty()) crit5_samples = samples_csv(estimate_delta(compact_quadratic(8)));
  bool same = true;
  std::string detail = "threads 8 digest " + digest_hex(crit5_samples);
  for (int t : {1, 4}) {
    const std::string s = samples_csv(estimate_delta(compact_quadratic(t)));
    same = same && s == crit5_samples;
    detail += ", threads " + std::to_string(t) + " digest " + digest_hex(s);
  }
  Outcome o;
  o.pass = same;
  o.detail = detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;  // wall-clock limit; 0 means none stated
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "solver exactness vs brute force", 10, c1_exactness},
      {2, "1-d comonotone oracle", 30, c2_comonotone},
      {4, "c-transform algebra and extension", 0, c4_ctransform},
      {5, "compact-support rate, quadratic cost", 1800, c5_compact},
      {6, "W1 dichotomy, disjoint vs identical", 2700, c6_dichotomy},
      {7, "unbounded gaussian supports", 1800, c7_unbounded},
      {8, "smooth surrogate", 5, c8_surrogate},
      {3, "duality certificates", 0, c3_duality},
      {9, "semi-concavity of potentials", 0, c9_semiconcavity},
      {10, "displacement growth", 0, c10_displacement},
      {11, "minimax gadget", 1200, c11_gadget},
      {12, "determinism across thread counts", 0, c12_determinism},
  };
  std::set<int> wanted;
  for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));

  std::map<int, std::pair<const Criterion*, Outcome>> results;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::fprintf(stderr, "running criterion %d: %s\n", c.id, c.title);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && o.seconds > c.budget_s) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.budget_s) + " s budget)";
    }
    std::fprintf(stderr, "  %s (%.1f s)\n", o.pass ? "pass" : "FAIL", o.seconds);
    results[c.id] = {&c, o};
  }
  int failures = 0;
  for (const auto& [id, r] : results) {
    std::printf("%s %2d  %s: %s [%.1f s]\n", r.second.pass ? "PASS" : "FAIL", id, r.first->title,
                r.second.detail.c_str(), r.second.seconds);
    failures += !r.second.pass;
  }
  std::fflush(stdout);
  return failures ? 1 : 0;
}
