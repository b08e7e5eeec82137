#include "otrates/rates.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "otrates/error.hpp"
#include "otrates/io.hpp"
#include "otrates/rng.hpp"
#include "otrates/solver.hpp"

namespace otrates {

std::string Metric::to_string() const {
  if (kind == Kind::kCost) return "cost";
  return "wasserstein:p=" + format_double(p) + ",delta0=" + format_double(delta0);
}

Metric Metric::parse(std::string_view text) {
  text = trim(text);
  Metric m;
  if (text == "cost") return m;
  const std::string_view prefix = "wasserstein:";
  if (text.substr(0, prefix.size()) != prefix)
    throw UsageError("metric '" + std::string(text) + "': expected 'cost' or 'wasserstein:p=<f>,delta0=<f>'");
  m.kind = Kind::kWasserstein;
  bool have_p = false, have_d = false;
  for (const auto& tok : split(text.substr(prefix.size()), ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("metric: malformed token '" + tok + "'");
    const std::string key(trim(std::string_view(tok).substr(0, eq)));
    const double v = parse_double(std::string_view(tok).substr(eq + 1));
    if (key == "p") {
      m.p = v;
      have_p = true;
    } else if (key == "delta0") {
      m.delta0 = v;
      have_d = true;
    } else {
      throw UsageError("metric: unknown parameter '" + tok + "'");
    }
  }
  if (!have_p || !have_d) throw UsageError("metric: wasserstein needs both p and delta0");
  if (!(m.p >= 1.0)) throw UsageError("metric: p must be at least 1");
  if (!(m.delta0 > 0.0)) throw UsageError("metric: delta0 must be positive");
  return m;
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw UsageError("n_grid is empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1) throw UsageError("n_grid entries must be positive");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw UsageError("n_grid must be strictly increasing");
  }
  if (reps < 2) throw UsageError("reps must be at least 2");
  if (metric.kind == Metric::Kind::kWasserstein) {
    if (!(pair.exact_value > 0.0)) throw UsageError("wasserstein units need a positive exact value");
    if (std::pow(pair.exact_value, 1.0 / metric.p) < metric.delta0)
      throw UsageError("wasserstein units need exact^(1/p) >= delta0");
  }
}

namespace {

struct Replicate {
  double value = std::numeric_limits<double>::quiet_NaN();
  double rel_gap = 0.0;
  double infeasibility = 0.0;
};

Replicate run_replication(const ExperimentConfig& cfg, std::size_t n, int rep) {
  Replicate out;
  try {
    const auto mu = sample(cfg.pair.mu, n, derive_seed({cfg.master_seed, n, static_cast<std::uint64_t>(rep), 0}));
    const auto nu = sample(cfg.pair.nu, n, derive_seed({cfg.master_seed, n, static_cast<std::uint64_t>(rep), 1}));
    const TransportPlan plan = solve_assignment(mu.points, nu.points, cfg.pair.cost);
    const PlanCheck chk = check_plan(plan, mu, nu, cfg.pair.cost);
    out.value = plan.value;
    out.rel_gap = chk.duality_gap / (1.0 + std::abs(plan.value));
    out.infeasibility = chk.dual_infeasibility;
  } catch (const NumericalError&) {
    out.value = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

RateReport finish(const ExperimentConfig& cfg, const std::vector<std::vector<Replicate>>& reps) {
  std::vector<std::vector<double>> estimates(reps.size());
  RateReport report;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    for (const Replicate& r : reps[k]) {
      estimates[k].push_back(r.value);
      report.max_rel_gap = std::max(report.max_rel_gap, r.rel_gap);
      report.max_dual_infeasibility = std::max(report.max_dual_infeasibility, r.infeasibility);
    }
  }
  report.exact_value = cfg.pair.exact_value;
  std::size_t failed = 0, total = 0;
  report.errors.resize(estimates.size());
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    for (double t : estimates[k]) {
      ++total;
      if (std::isnan(t)) ++failed;
      report.errors[k].push_back(std::isnan(t) ? t : std::abs(t - cfg.pair.exact_value));
    }
  }
  if (failed * 100 > total)
    throw NumericalError(std::to_string(failed) + " of " + std::to_string(total) +
                         " replications failed (more than 1%)");
  report.estimates = std::move(estimates);
  report.per_n.resize(cfg.n_grid.size());
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) report.per_n[k].n = cfg.n_grid[k];
  summarize(report);
  if (cfg.metric.kind == Metric::Kind::kWasserstein)
    return to_wasserstein_units(report, cfg.metric.p, cfg.metric.delta0);
  return report;
}

// Replicate statistic per report: resampled delta_hat per n, then the OLS slope.
std::vector<double> bootstrap_slopes(const RateReport& r, int bootstrap, std::uint64_t key) {
  std::vector<double> lx;
  for (const auto& row : r.per_n) lx.push_back(std::log(static_cast<double>(row.n)));
  std::vector<std::vector<double>> valid(r.per_n.size());
  for (std::size_t k = 0; k < r.per_n.size(); ++k) {
    if (k < r.errors.size())
      for (double e : r.errors[k])
        if (!std::isnan(e)) valid[k].push_back(e);
  }
  std::vector<double> slopes;
  slopes.reserve(bootstrap);
  std::vector<double> ly(r.per_n.size());
  for (int b = 0; b < bootstrap; ++b) {
    CounterRng rng(derive_seed({key, static_cast<std::uint64_t>(b)}));
    bool usable = true;
    for (std::size_t k = 0; k < r.per_n.size(); ++k) {
      double mean = r.per_n[k].delta_hat;
      if (!valid[k].empty()) {
        double s = 0.0;
        for (std::size_t t = 0; t < valid[k].size(); ++t) s += valid[k][rng.below(valid[k].size())];
        mean = s / static_cast<double>(valid[k].size());
      }
      if (!(mean > 0.0)) {
        usable = false;
        break;
      }
      ly[k] = std::log(mean);
    }
    slopes.push_back(usable ? ols_slope(lx, ly) : std::numeric_limits<double>::quiet_NaN());
  }
  return slopes;
}

double quantile(std::vector<double> s, double q) {
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::pair<double, double> percentile_ci(const std::vector<double>& draws, double centre) {
  std::vector<double> ok;
  for (double v : draws)
    if (!std::isnan(v)) ok.push_back(v);
  if (ok.empty()) return {centre, centre};
  // Widened if needed so the interval always covers the point estimate.
  return {std::min(centre, quantile(ok, 0.025)), std::max(centre, quantile(ok, 0.975))};
}

}  // namespace

void summarize(RateReport& report) {
  const double ep = report.exact_value;
  for (std::size_t k = 0; k < report.per_n.size(); ++k) {
    RateRow& row = report.per_n[k];
    double sum = 0.0, signed_sum = 0.0;
    int ok = 0, bad = 0;
    for (std::size_t r = 0; r < report.errors[k].size(); ++r) {
      const double e = report.errors[k][r];
      if (std::isnan(e)) {
        ++bad;
        continue;
      }
      ++ok;
      sum += e;
      signed_sum += report.estimates[k][r] - ep;
    }
    row.reps = ok;
    row.failed = bad;
    row.delta_hat = ok ? sum / ok : 0.0;
    row.signed_mean = ok ? signed_sum / ok : 0.0;
    double ss = 0.0;
    for (double e : report.errors[k])
      if (!std::isnan(e)) ss += (e - row.delta_hat) * (e - row.delta_hat);
    row.se = ok > 1 ? std::sqrt(ss / (ok - 1)) / std::sqrt(static_cast<double>(ok)) : 0.0;
  }
}

RateReport estimate_delta(const ExperimentConfig& config) {
  config.validate();
  const std::size_t grid = config.n_grid.size();
  const int reps = config.reps;
  std::vector<std::vector<Replicate>> est(grid, std::vector<Replicate>(reps));
  const long long tasks = static_cast<long long>(grid) * reps;
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  // Largest n first so the long solves do not trail at the end.
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long t = 0; t < tasks; ++t) {
    const std::size_t k = grid - 1 - static_cast<std::size_t>(t / reps);
    const int r = static_cast<int>(t % reps);
    est[k][r] = run_replication(config, config.n_grid[k], r);
  }
  return finish(config, est);
}

RateReport estimate_delta_serial(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::vector<Replicate>> est(config.n_grid.size(), std::vector<Replicate>(config.reps));
  for (std::size_t k = 0; k < config.n_grid.size(); ++k)
    for (int r = 0; r < config.reps; ++r) est[k][r] = run_replication(config, config.n_grid[k], r);
  return finish(config, est);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw UsageError("slope fit needs at least two distinct n");
  return sxy / sxx;
}

RateReport fit_slope(RateReport report, int bootstrap, std::uint64_t seed) {
  if (report.per_n.size() < 2) throw UsageError("slope fit needs at least two grid points");
  if (bootstrap < 0) throw UsageError("bootstrap count must be nonnegative");
  std::vector<double> lx, ly;
  for (const auto& row : report.per_n) {
    if (!(row.delta_hat > 0.0))
      throw UsageError("delta_hat is zero at n=" + std::to_string(row.n) + "; a log-log slope is undefined");
    lx.push_back(std::log(static_cast<double>(row.n)));
    ly.push_back(std::log(row.delta_hat));
  }
  const double slope = ols_slope(lx, ly);
  report.slope = slope;
  report.bootstrap = bootstrap;
  report.slope_ci = percentile_ci(bootstrap_slopes(report, bootstrap, derive_seed({seed, content_hash(report)})), slope);
  return report;
}

RegimeComparison compare_regimes(const RateReport& a, const RateReport& b, int bootstrap, std::uint64_t seed) {
  if (!a.slope || !b.slope) throw UsageError("compare_regimes needs fitted slopes on both reports");
  // Quantile interpolation is not odd in floating point; fix an order so
  // swapping the arguments negates the interval exactly.
  if (content_hash(a) > content_hash(b)) {
    const RegimeComparison r = compare_regimes(b, a, bootstrap, seed);
    return {-r.difference, -r.ci_hi, -r.ci_lo};
  }
  const auto sa = bootstrap_slopes(a, bootstrap, derive_seed({seed, content_hash(a)}));
  const auto sb = bootstrap_slopes(b, bootstrap, derive_seed({seed, content_hash(b)}));
  RegimeComparison out;
  out.difference = *a.slope - *b.slope;
  std::vector<double> diff(sa.size());
  for (std::size_t k = 0; k < sa.size(); ++k) diff[k] = sa[k] - sb[k];
  std::tie(out.ci_lo, out.ci_hi) = percentile_ci(diff, out.difference);
  return out;
}

RateReport to_wasserstein_units(const RateReport& report, double p, double delta0) {
  if (!(p >= 1.0)) throw UsageError("W_p order must be at least 1");
  if (!(report.exact_value > 0.0))
    throw UsageError("wasserstein units need a positive exact value; the conversion degenerates at 0");
  const double root = std::pow(report.exact_value, 1.0 / p);
  if (!(delta0 > 0.0) || root < delta0)
    throw UsageError("wasserstein units need exact^(1/p) >= delta0 > 0");
  RateReport out = report;
  out.slope.reset();
  out.slope_ci.reset();
  out.exact_value = root;
  for (std::size_t k = 0; k < out.estimates.size(); ++k) {
    for (std::size_t r = 0; r < out.estimates[k].size(); ++r) {
      const double t = report.estimates[k][r];
      if (std::isnan(t)) continue;
      const double w = p == 1.0 ? t : std::pow(std::max(t, 0.0), 1.0 / p);
      out.estimates[k][r] = w;
      out.errors[k][r] = std::abs(w - root);
    }
  }
  summarize(out);
  return out;
}

std::string samples_csv(const RateReport& report) {
  std::ostringstream os;
  os << "n,rep,estimate,abs_error\n";
  for (std::size_t k = 0; k < report.per_n.size(); ++k)
    for (std::size_t r = 0; r < report.estimates[k].size(); ++r)
      os << report.per_n[k].n << ',' << r << ',' << format_double(report.estimates[k][r]) << ','
         << format_double(report.errors[k][r]) << '\n';
  return os.str();
}

std::string summary_csv(const RateReport& report) {
  std::ostringstream os;
  os << "n,delta_hat,se,reps\n";
  for (const auto& row : report.per_n)
    os << row.n << ',' << format_double(row.delta_hat) << ',' << format_double(row.se) << ',' << row.reps << '\n';
  return os.str();
}

std::string slope_txt(const RateReport& report) {
  if (!report.slope || !report.slope_ci) throw UsageError("report has no fitted slope");
  std::ostringstream os;
  os << "slope=" << format_double(*report.slope) << '\n'
     << "ci_lo=" << format_double(report.slope_ci->first) << '\n'
     << "ci_hi=" << format_double(report.slope_ci->second) << '\n'
     << "B=" << report.bootstrap << '\n';
  return os.str();
}

std::uint64_t content_hash(const RateReport& report) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (std::size_t k = 0; k < report.per_n.size(); ++k) {
    mix(report.per_n[k].n);
    mix(std::bit_cast<std::uint64_t>(report.per_n[k].delta_hat));
    if (k < report.errors.size())
      for (double e : report.errors[k]) mix(std::bit_cast<std::uint64_t>(e));
  }
  return h;
}

}  // namespace otrates
