#include "otrates/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otrates/error.hpp"
#include "otrates/io.hpp"

namespace otrates {

namespace {

// ||z||_r <= scale * ||z||_2
double lr_to_l2_scale(double r, int dim) {
  return std::pow(static_cast<double>(dim), std::max(0.0, 1.0 / r - 0.5));
}

void require_dim(const CostSpec& cost, std::size_t n, const char* what) {
  if (static_cast<int>(n) != cost.dim())
    throw UsageError(std::string(what) + " has dimension " + std::to_string(n) + ", cost expects " +
                     std::to_string(cost.dim()));
}

}  // namespace

CostSpec CostSpec::power_lr(double p, double r, int dim) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("power cost needs p >= 1, got " + format_double(p));
  if (!(r >= 1.0) || !std::isfinite(r)) throw UsageError("power cost needs r >= 1, got " + format_double(r));
  if (dim < 1) throw UsageError("cost dimension must be positive");
  CostSpec c;
  c.family_ = CostFamily::kPowerLr;
  c.dim_ = dim;
  c.p_ = p;
  c.r_ = r;
  c.meta_.alpha = std::min({2.0, p, r});
  c.meta_.growth_p = p;
  c.meta_.kappa = r >= 2.0 ? p : std::max(p, std::pow(lr_to_l2_scale(r, dim), p));
  if (r == 2.0 && p <= 2.0) {
    c.meta_.z0 = Vec(dim, 0.0);
    c.meta_.h4_lambda = 1.0;
  }
  return c;
}

CostSpec CostSpec::smooth_power(double p, double eps, int dim) {
  if (!(p > 1.0) || !std::isfinite(p)) throw UsageError("smooth cost needs p > 1, got " + format_double(p));
  if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("smooth cost needs 0 < eps <= 1, got " + format_double(eps));
  if (dim < 1) throw UsageError("cost dimension must be positive");
  CostSpec c;
  c.family_ = CostFamily::kSmoothPower;
  c.dim_ = dim;
  c.p_ = p;
  c.r_ = 2.0;
  c.eps_ = eps;
  c.smooth_shift_ = std::pow(eps, 2.0 / p);
  c.smooth_offset_ = std::pow(c.smooth_shift_, p / 2.0);
  c.meta_.alpha = 2.0;
  c.meta_.growth_p = p;
  // The growth constant appears as 2^{p/2-1} p and as 2^{1-p/2} p; keep the larger.
  c.meta_.kappa = std::max(std::pow(2.0, p / 2.0 - 1.0) * p, std::pow(2.0, 1.0 - p / 2.0) * p);
  return c;
}

double CostSpec::from_sq(double sq) const {
  if (family_ == CostFamily::kSmoothPower)
    return std::max(0.0, std::pow(sq + smooth_shift_, p_ / 2.0) - smooth_offset_);
  if (p_ == 2.0) return sq;
  if (p_ == 1.0) return std::sqrt(sq);
  return std::pow(sq, p_ / 2.0);
}

double CostSpec::between(const double* x, const double* y) const {
  if (r_ == 2.0) {
    double sq = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double t = x[k] - y[k];
      sq += t * t;
    }
    return from_sq(sq);
  }
  if (r_ == 1.0) {
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += std::abs(x[k] - y[k]);
    return p_ == 1.0 ? s : std::pow(s, p_);
  }
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) s += std::pow(std::abs(x[k] - y[k]), r_);
  return std::pow(s, p_ / r_);
}

double CostSpec::h(std::span<const double> z) const {
  require_dim(*this, z.size(), "argument");
  static thread_local Vec zero;
  zero.assign(dim_, 0.0);
  return between(z.data(), zero.data());
}

double CostSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  require_dim(*this, x.size(), "x");
  require_dim(*this, y.size(), "y");
  return between(x.data(), y.data());
}

Vec CostSpec::grad(std::span<const double> z) const {
  require_dim(*this, z.size(), "argument");
  Vec g(dim_, 0.0);
  if (family_ == CostFamily::kSmoothPower) {
    const double f = p_ * std::pow(squared_norm(z) + smooth_shift_, p_ / 2.0 - 1.0);
    for (int k = 0; k < dim_; ++k) g[k] = f * z[k];
    return g;
  }
  if (r_ < 2.0) {
    for (int k = 0; k < dim_; ++k)
      if (z[k] == 0.0)
        throw DomainError("power cost with r=" + format_double(r_) + " is not differentiable where coordinate " +
                          std::to_string(k) + " vanishes");
  }
  const bool at_origin = std::all_of(z.begin(), z.end(), [](double t) { return t == 0.0; });
  if (at_origin) {
    if (p_ <= 1.0) throw DomainError("power cost with p=1 has a kink at the origin");
    return g;
  }
  double s = 0.0;
  for (double t : z) s += std::pow(std::abs(t), r_);
  const double norm_r = std::pow(s, 1.0 / r_);
  const double outer = p_ * std::pow(norm_r, p_ - r_);
  for (int k = 0; k < dim_; ++k) {
    const double t = z[k];
    g[k] = outer * (r_ == 1.0 ? (t > 0 ? 1.0 : -1.0) : t * std::pow(std::abs(t), r_ - 2.0));
  }
  return g;
}

double CostSpec::omega(double t) const {
  if (!radial()) throw UsageError("cost " + name() + " has no radial profile");
  return from_sq(t * t);
}

double CostSpec::omega_prime(double t) const {
  if (!radial()) throw UsageError("cost " + name() + " has no radial profile");
  if (family_ == CostFamily::kSmoothPower) return p_ * t * std::pow(t * t + smooth_shift_, p_ / 2.0 - 1.0);
  return p_ * std::pow(t, p_ - 1.0);
}

double CostSpec::sup_on_ball(double radius) const {
  if (family_ == CostFamily::kSmoothPower) return omega(radius);
  return std::pow(lr_to_l2_scale(r_, dim_) * radius, p_);
}

double CostSpec::lambda_on_ball(double radius) const {
  const double d = dim_;
  double raw = 1.0;
  if (family_ == CostFamily::kSmoothPower) {
    const double e = smooth_shift_;
    const double hess_op = p_ < 2.0 ? p_ * std::pow(e, p_ / 2.0 - 1.0)
                                     : p_ * (p_ - 1.0) * std::pow(radius * radius + e, p_ / 2.0 - 1.0);
    raw = std::max({1.0, omega(radius), omega_prime(radius), d * hess_op});
  } else {
    const double s = lr_to_l2_scale(r_, dim_) * radius;
    const double sup_h = std::pow(s, p_);
    const double grad = p_ * std::sqrt(d) * std::pow(s, p_ - 1.0);
    const double alpha = meta_.alpha;
    // Hessian trace bound (a bound on the operator norm since h is convex).
    const double curvature = p_ * d * (std::abs(p_ - r_) + r_ - 1.0 + (alpha < 2.0 ? 1.0 : 0.0));
    double smooth_part = 0.0;
    if (alpha == 2.0) {
      smooth_part = curvature * std::pow(s, p_ - 2.0);
    } else if (alpha > 1.0) {
      smooth_part = curvature * std::pow(2.0, 2.0 - alpha) * std::pow(std::max(1.0, s), p_ - alpha);
    }
    raw = std::max({1.0, sup_h, grad, smooth_part});
  }
  return 2.0 * raw;
}

CostSpec CostSpec::with_reference_point(Vec z0, double lambda) const {
  require_dim(*this, z0.size(), "reference point");
  if (!(lambda > 0.0)) throw UsageError("reference-point lambda must be positive");
  CostSpec c = *this;
  c.meta_.z0 = std::move(z0);
  c.meta_.h4_lambda = lambda;
  return c;
}

std::string CostSpec::name() const {
  if (family_ == CostFamily::kSmoothPower) return "smooth:p=" + format_double(p_) + ",eps=" + format_double(eps_);
  return "power:p=" + format_double(p_) + ",r=" + format_double(r_);
}

double eval_cost(const CostSpec& cost, std::span<const double> x, std::span<const double> y) { return cost(x, y); }
double eval_h(const CostSpec& cost, std::span<const double> z) { return cost.h(z); }
Vec grad_h(const CostSpec& cost, std::span<const double> z) { return cost.grad(z); }

// (|z|^2 + eps^{2/p})^{p/2} - eps is within 2 eps of |z|^p only for p <= 2;
// above that the gap grows like |z|^{p-2} eps^{2/p}. |z|^p is already C^2 there.
CostSpec smooth_approx(double p, double eps, int dim) {
  if (!(p > 1.0)) throw UsageError("smooth cost needs p > 1, got " + format_double(p));
  if (!(eps > 0.0 && eps <= 1.0)) throw UsageError("smooth cost needs eps in (0, 1], got " + format_double(eps));
  return p > 2.0 ? CostSpec::power_lr(p, 2.0, dim) : CostSpec::smooth_power(p, eps, dim);
}

CostSpec parse_cost(std::string_view text, int dim) {
  text = trim(text);
  auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw UsageError("cost '" + std::string(text) + "': expected '<family>:<params>'");
  const std::string family(trim(text.substr(0, colon)));
  if (family != "power" && family != "smooth")
    throw UsageError("cost: unknown family '" + family + "' (expected 'power' or 'smooth')");
  std::optional<double> p, second;
  const char* second_key = family == "power" ? "r" : "eps";
  for (const auto& token : split(text.substr(colon + 1), ',')) {
    auto eq = token.find('=');
    if (eq == std::string::npos) throw UsageError("cost: malformed token '" + token + "' (expected key=value)");
    const std::string key(trim(std::string_view(token).substr(0, eq)));
    double value = 0.0;
    try {
      value = parse_double(std::string_view(token).substr(eq + 1));
    } catch (const UsageError&) {
      throw UsageError("cost: malformed value in token '" + token + "'");
    }
    if (key == "p") {
      p = value;
    } else if (key == second_key) {
      second = value;
    } else {
      throw UsageError("cost: unknown parameter '" + token + "' for family '" + family + "'");
    }
  }
  if (!p) throw UsageError("cost: missing parameter 'p'");
  if (!second) throw UsageError(std::string("cost: missing parameter '") + second_key + "'");
  return family == "power" ? CostSpec::power_lr(*p, *second, dim) : CostSpec::smooth_power(*p, *second, dim);
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kH0: return "H0";
    case Condition::kH1: return "H1";
    case Condition::kH3: return "H3";
    case Condition::kH4: return "H4";
  }
  return "?";
}

Condition parse_condition(std::string_view text) {
  text = trim(text);
  if (text == "H0") return Condition::kH0;
  if (text == "H1") return Condition::kH1;
  if (text == "H3") return Condition::kH3;
  if (text == "H4") return Condition::kH4;
  throw UsageError("unknown condition '" + std::string(text) + "' (expected H0, H1, H3 or H4)");
}

Region Region::ball(Vec center, double radius) {
  if (!(radius > 0.0)) throw UsageError("region radius must be positive");
  return Region{Shape::kBall, std::move(center), radius};
}

Region Region::box(Vec center, double half_width) {
  if (!(half_width > 0.0)) throw UsageError("region half width must be positive");
  return Region{Shape::kBox, std::move(center), half_width};
}

Vec Region::draw(CounterRng& rng) const {
  const std::size_t d = center.size();
  Vec z(d);
  if (shape == Shape::kBox) {
    for (std::size_t k = 0; k < d; ++k) z[k] = center[k] + rng.uniform(-extent, extent);
    return z;
  }
  double sq = 0.0;
  for (auto& t : z) {
    t = rng.normal();
    sq += t * t;
  }
  const double scale = extent * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(sq);
  for (std::size_t k = 0; k < d; ++k) z[k] = center[k] + scale * z[k];
  return z;
}

double Region::outer_radius() const {
  const double c = norm2(center);
  return shape == Shape::kBall ? c + extent : c + extent * std::sqrt(static_cast<double>(center.size()));
}

namespace {

struct ViolationTracker {
  double worst = 0.0;
  std::vector<Vec> witnesses;
  void offer(double v, std::initializer_list<const Vec*> points) {
    if (v > worst) {
      worst = v;
      witnesses.clear();
      for (const Vec* p : points) witnesses.push_back(*p);
    }
  }
};

Vec negate(const Vec& z) {
  Vec out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = -z[k];
  return out;
}

double distance(const Vec& a, const Vec& b) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sq);
}

}  // namespace

ConditionReport check_conditions(const CostSpec& cost, Condition condition, const Region& region,
                                 std::int64_t budget, std::uint64_t seed) {
  if (budget < 1) throw UsageError("condition check budget must be at least 1");
  if (static_cast<int>(region.center.size()) != cost.dim())
    throw UsageError("region dimension does not match the cost");
  CounterRng rng(derive_seed({seed, static_cast<std::uint64_t>(condition)}));
  ConditionReport report;
  report.condition = condition;
  report.trials = budget;
  ViolationTracker track;
  const int d = cost.dim();

  switch (condition) {
    case Condition::kH0: {
      report.tolerance = 1e-12;
      const Vec origin(d, 0.0);
      track.offer(std::abs(cost.h(origin)), {&origin});
      for (std::int64_t t = 0; t < budget; ++t) {
        const Vec z1 = region.draw(rng), z2 = region.draw(rng);
        Vec mid(d);
        for (int k = 0; k < d; ++k) mid[k] = 0.5 * (z1[k] + z2[k]);
        const double h1 = cost.h(z1), h2 = cost.h(z2), hm = cost.h(mid);
        const double scale = 1.0 + std::abs(h1) + std::abs(h2);
        track.offer(-h1 / scale, {&z1});
        track.offer(std::abs(h1 - cost.h(negate(z1))) / scale, {&z1});
        track.offer((hm - 0.5 * (h1 + h2)) / scale, {&z1, &z2});
      }
      report.detail = "relative violations of nonnegativity, evenness and midpoint convexity";
      break;
    }
    case Condition::kH1: {
      const double lambda = cost.lambda_on_ball(region.outer_radius());
      const double alpha = cost.meta().alpha;
      report.tolerance = 0.0;
      std::int64_t skipped = 0;
      for (std::int64_t t = 0; t < budget; ++t) {
        const Vec z1 = region.draw(rng), z2 = region.draw(rng);
        const double gap = distance(z1, z2);
        if (gap == 0.0) continue;
        track.offer(std::abs(cost.h(z1)) - lambda, {&z1});
        if (alpha <= 1.0) {
          const double q = std::abs(cost.h(z1) - cost.h(z2)) / std::pow(gap, alpha);
          track.offer(q - lambda, {&z1, &z2});
          continue;
        }
        Vec g1, g2;
        try {
          g1 = cost.grad(z1);
          g2 = cost.grad(z2);
        } catch (const DomainError&) {
          ++skipped;
          continue;
        }
        track.offer(norm2(g1) - lambda, {&z1});
        double sq = 0.0;
        for (int k = 0; k < d; ++k) sq += (g1[k] - g2[k]) * (g1[k] - g2[k]);
        track.offer(std::sqrt(sq) / std::pow(gap, alpha - 1.0) - lambda, {&z1, &z2});
      }
      report.detail = "Holder quotients against Lambda=" + format_double(lambda) + " (alpha=" +
                      format_double(alpha) + ", skipped " + std::to_string(skipped) + " kink samples)";
      break;
    }
    case Condition::kH3: {
      if (!cost.radial())
        throw UsageError("H3 needs a radial cost h(z)=omega(||z||); " + cost.name() + " is not radial");
      const double outer = region.outer_radius();
      if (!(outer > 1.0)) throw UsageError("H3 is checked on radii > 1; region does not reach beyond radius 1");
      const double kappa = cost.meta().kappa, p = cost.meta().growth_p;
      report.tolerance = 1e-12;
      for (std::int64_t t = 0; t < budget; ++t) {
        const double radius = rng.uniform(1.0, outer);
        if (radius <= 1.0) continue;
        const double q = cost.omega_prime(radius) / std::pow(radius, p - 1.0);
        const Vec witness{radius};
        track.offer(std::max(1.0 / kappa - q, q - kappa), {&witness});
        Vec z(d);
        double sq = 0.0;
        for (auto& v : z) {
          v = rng.normal();
          sq += v * v;
        }
        for (auto& v : z) v *= radius / std::sqrt(sq);
        const double om = cost.omega(radius);
        track.offer(std::abs(cost.h(z) - om) / (1.0 + om), {&z});
      }
      report.detail = "omega'(t)/t^(p-1) against [1/kappa, kappa], kappa=" + format_double(kappa);
      break;
    }
    case Condition::kH4: {
      if (!cost.meta().z0) throw UsageError("H4 needs a reference point z0; cost " + cost.name() + " carries none");
      const Vec& z0 = *cost.meta().z0;
      const double alpha = cost.meta().alpha, lam = cost.meta().h4_lambda;
      const double h0 = cost.h(z0);
      const Vec g0 = alpha > 1.0 ? cost.grad(z0) : Vec(d, 0.0);
      report.tolerance = 1e-12;
      for (std::int64_t t = 0; t < budget; ++t) {
        const Vec z = region.draw(rng);
        Vec dz(d);
        for (int k = 0; k < d; ++k) dz[k] = z[k] - z0[k];
        const double hz = cost.h(z);
        const double lhs = hz - h0 - dot(g0, dz);
        const double rhs = lam * std::pow(norm2(dz), alpha);
        track.offer((rhs - lhs) / (1.0 + std::abs(hz)), {&z});
      }
      report.detail = "lower Taylor bound with lambda=" + format_double(lam);
      break;
    }
  }
  report.max_violation = track.worst;
  report.witnesses = std::move(track.witnesses);
  report.pass = report.max_violation <= report.tolerance;
  return report;
}

}  // namespace otrates
