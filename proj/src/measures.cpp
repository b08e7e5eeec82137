#include "otrates/measures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "otrates/error.hpp"
#include "otrates/io.hpp"
#include "otrates/rng.hpp"

namespace otrates {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) out(i, j) = m(i, j);
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m;
  m.n = static_cast<int>(e.rows());
  m.a.resize(static_cast<std::size_t>(m.n) * m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) m.a[static_cast<std::size_t>(i) * m.n + j] = e(i, j);
  return m;
}

std::string join_vec(const Vec& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    s += format_double(v[k]);
  }
  return s;
}

void draw_point(const SamplerSpec& s, CounterRng& rng, double* out) {
  const int d = s.dim();
  switch (s.kind) {
    case SamplerSpec::Kind::kPointMass:
      std::copy(s.center.begin(), s.center.end(), out);
      return;
    case SamplerSpec::Kind::kUniformCube:
      for (int k = 0; k < d; ++k) out[k] = s.center[k] + rng.uniform(-s.extent, s.extent);
      return;
    case SamplerSpec::Kind::kUniformBall: {
      double sq = 0.0;
      for (int k = 0; k < d; ++k) {
        out[k] = rng.normal();
        sq += out[k] * out[k];
      }
      const double scale = s.extent * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(sq);
      for (int k = 0; k < d; ++k) {
        const double v = s.center[k] + scale * out[k];
        out[k] = v;
      }
      // Guard against rounding pushing a point past the boundary.
      double dist_sq = 0.0;
      for (int k = 0; k < d; ++k) dist_sq += (out[k] - s.center[k]) * (out[k] - s.center[k]);
      if (dist_sq > s.extent * s.extent) {
        const double shrink = s.extent / std::sqrt(dist_sq) * (1.0 - 1e-15);
        for (int k = 0; k < d; ++k) out[k] = s.center[k] + (out[k] - s.center[k]) * shrink;
      }
      return;
    }
    case SamplerSpec::Kind::kGaussian: {
      thread_local Vec g;
      g.resize(d);
      for (int k = 0; k < d; ++k) g[k] = rng.normal();
      for (int i = 0; i < d; ++i) {
        double v = s.center[i];
        for (int k = 0; k < d; ++k) v += s.cov_sqrt(i, k) * g[k];
        out[i] = v;
      }
      return;
    }
    case SamplerSpec::Kind::kTranslate:
      draw_point(*s.inner, rng, out);
      for (int k = 0; k < d; ++k) out[k] += s.center[k];
      return;
  }
}

void require_finite(const Vec& v, const char* what) {
  if (v.empty()) throw UsageError(std::string(what) + " must have at least one coordinate");
  for (double x : v)
    if (!std::isfinite(x)) throw UsageError(std::string(what) + " has a non-finite coordinate");
}

}  // namespace

DiscreteMeasure DiscreteMeasure::uniform(PointCloud points) {
  const std::size_t n = points.size();
  if (n == 0) throw UsageError("a measure needs at least one atom");
  return DiscreteMeasure{std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void DiscreteMeasure::validate(double tol) const {
  if (points.size() == 0) throw UsageError("a measure needs at least one atom");
  if (points.size() != weights.size())
    throw UsageError("measure has " + std::to_string(points.size()) + " points but " +
                     std::to_string(weights.size()) + " weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("measure weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > tol) throw UsageError("measure weights sum to " + format_double(total) + ", not 1");
}

Matrix Matrix::identity(int n, double scale) {
  Matrix m;
  m.n = n;
  m.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) m.a[static_cast<std::size_t>(i) * n + i] = scale;
  return m;
}

void require_spd(const Matrix& m, const char* what) {
  if (m.n < 1 || m.a.size() != static_cast<std::size_t>(m.n) * m.n)
    throw UsageError(std::string(what) + " is not a square matrix");
  double scale = 0.0;
  for (double x : m.a) {
    if (!std::isfinite(x)) throw UsageError(std::string(what) + " has a non-finite entry");
    scale = std::max(scale, std::abs(x));
  }
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * std::max(1.0, scale))
        throw UsageError(std::string(what) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(m), Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw UsageError(std::string(what) + " is not positive definite");
}

Matrix sqrtm_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(m));
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(1e-12).cwiseSqrt();
  return from_eigen(eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose());
}

SamplerSpec uniform_ball(Vec center, double radius) {
  require_finite(center, "ball centre");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw UsageError("ball radius must be positive");
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::kUniformBall;
  s.center = std::move(center);
  s.extent = radius;
  return s;
}

SamplerSpec uniform_cube(Vec center, double half_width) {
  require_finite(center, "cube centre");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw UsageError("cube half width must be positive");
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::kUniformCube;
  s.center = std::move(center);
  s.extent = half_width;
  return s;
}

SamplerSpec gaussian(Vec mean, Matrix covariance) {
  require_finite(mean, "gaussian mean");
  if (covariance.n != static_cast<int>(mean.size()))
    throw UsageError("gaussian covariance dimension does not match the mean");
  require_spd(covariance, "gaussian covariance");
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::kGaussian;
  s.center = std::move(mean);
  s.cov_sqrt = sqrtm_psd(covariance);
  s.covariance = std::move(covariance);
  return s;
}

SamplerSpec point_mass(Vec x) {
  require_finite(x, "point mass");
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::kPointMass;
  s.center = std::move(x);
  return s;
}

SamplerSpec translate(SamplerSpec inner, Vec z0) {
  require_finite(z0, "translation");
  if (static_cast<int>(z0.size()) != inner.dim()) throw UsageError("translation dimension does not match sampler");
  SamplerSpec s;
  s.kind = SamplerSpec::Kind::kTranslate;
  s.center = std::move(z0);
  s.inner = std::make_shared<const SamplerSpec>(std::move(inner));
  return s;
}

SamplerSpec SamplerSpec::flattened() const {
  if (kind != Kind::kTranslate) return *this;
  SamplerSpec base = inner->flattened();
  for (int k = 0; k < dim(); ++k) base.center[k] += center[k];
  return base;
}

bool SamplerSpec::compact() const { return flattened().kind != Kind::kGaussian; }

double SamplerSpec::radius_bound() const {
  const SamplerSpec f = flattened();
  const double c = norm2(f.center);
  switch (f.kind) {
    case Kind::kPointMass: return c;
    case Kind::kUniformBall: return c + f.extent;
    case Kind::kUniformCube: return c + f.extent * std::sqrt(static_cast<double>(f.dim()));
    default: throw UsageError("sampler " + describe() + " has unbounded support");
  }
}

std::string SamplerSpec::describe() const {
  switch (kind) {
    case Kind::kPointMass: return "point:x=" + join_vec(center);
    case Kind::kUniformBall: return "ball:c=" + join_vec(center) + ";r=" + format_double(extent);
    case Kind::kUniformCube: return "cube:c=" + join_vec(center) + ";h=" + format_double(extent);
    case Kind::kGaussian: return "gauss:m=" + join_vec(center) + ";cov=" + join_vec(covariance.a);
    case Kind::kTranslate: return "translate:{" + inner->describe() + "};z0=" + join_vec(center);
  }
  return "?";
}

PointCloud sample_points(const SamplerSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("sample size must be positive");
  PointCloud pts(spec.dim(), n);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) draw_point(spec, rng, pts[i].data());
  return pts;
}

DiscreteMeasure sample(const SamplerSpec& spec, std::size_t n, std::uint64_t seed) {
  return DiscreteMeasure::uniform(sample_points(spec, n, seed));
}

namespace {

struct SpecTokens {
  std::string kind;
  std::string reference;
  std::vector<std::pair<std::string, std::string>> params;
  std::optional<int> dim;
};

SpecTokens tokenize_spec(std::string_view text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
  auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw UsageError("sampler '" + std::string(text) + "': expected '<kind>:<params>'");
  SpecTokens t;
  t.kind = std::string(trim(text.substr(0, colon)));
  for (const auto& token : split(text.substr(colon + 1), ';')) {
    if (token.empty()) continue;
    auto eq = token.find('=');
    if (eq == std::string::npos) {
      if (t.kind == "translate" && t.reference.empty()) {
        t.reference = token;
        continue;
      }
      throw UsageError("sampler: malformed token '" + token + "' (expected key=value)");
    }
    std::string key(trim(std::string_view(token).substr(0, eq)));
    std::string value(trim(std::string_view(token).substr(eq + 1)));
    if (key == "d") {
      long long d = parse_int(value);
      if (d < 1) throw UsageError("sampler: dimension token '" + token + "' must be positive");
      t.dim = static_cast<int>(d);
    } else {
      t.params.emplace_back(std::move(key), std::move(value));
    }
  }
  return t;
}

Vec parse_coords(const std::string& key, const std::string& value, std::optional<int> dim) {
  Vec v;
  for (const auto& tok : split(value, ',')) {
    try {
      v.push_back(parse_double(tok));
    } catch (const UsageError&) {
      throw UsageError("sampler: malformed coordinate '" + tok + "' in '" + key + "=" + value + "'");
    }
  }
  if (dim && v.size() == 1 && *dim > 1) v.assign(*dim, v[0]);
  if (dim && static_cast<int>(v.size()) != *dim)
    throw UsageError("sampler: '" + key + "' has " + std::to_string(v.size()) + " coordinates, expected " +
                     std::to_string(*dim));
  return v;
}

Matrix parse_covariance(const std::string& value, int dim) {
  if (value == "I") return Matrix::identity(dim);
  if (value.size() > 1 && value.back() == 'I') {
    return Matrix::identity(dim, parse_double(std::string_view(value).substr(0, value.size() - 1)));
  }
  if (value.rfind("diag:", 0) == 0) {
    Vec diag = parse_coords("cov", value.substr(5), dim);
    Matrix m = Matrix::identity(dim);
    for (int i = 0; i < dim; ++i) m.a[static_cast<std::size_t>(i) * dim + i] = diag[i];
    return m;
  }
  Vec full;
  for (const auto& tok : split(value, ',')) full.push_back(parse_double(tok));
  if (full.size() != static_cast<std::size_t>(dim) * dim)
    throw UsageError("sampler: covariance '" + value + "' needs " + std::to_string(dim * dim) + " entries");
  Matrix m;
  m.n = dim;
  m.a = std::move(full);
  return m;
}

}  // namespace

SamplerSpec parse_sampler(std::string_view text, const std::function<const SamplerSpec*(std::string_view)>& lookup) {
  SpecTokens t = tokenize_spec(text);
  auto get = [&](const char* key) -> const std::string& {
    for (const auto& [k, v] : t.params)
      if (k == key) return v;
    throw UsageError("sampler '" + t.kind + "': missing parameter '" + key + "'");
  };
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : t.params) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw UsageError("sampler '" + t.kind + "': unknown parameter '" + k + "=" + v + "'");
    }
  };
  if (t.kind == "ball" || t.kind == "cube") {
    const char* size_key = t.kind == "ball" ? "r" : "h";
    check_keys({"c", size_key});
    Vec c = parse_coords("c", get("c"), t.dim);
    double size = parse_double(get(size_key));
    return t.kind == "ball" ? uniform_ball(std::move(c), size) : uniform_cube(std::move(c), size);
  }
  if (t.kind == "gauss") {
    check_keys({"m", "cov"});
    Vec m = parse_coords("m", get("m"), t.dim);
    Matrix cov = parse_covariance(get("cov"), static_cast<int>(m.size()));
    return gaussian(std::move(m), std::move(cov));
  }
  if (t.kind == "point") {
    check_keys({"x"});
    return point_mass(parse_coords("x", get("x"), t.dim));
  }
  if (t.kind == "translate") {
    check_keys({"z0"});
    if (t.reference.empty()) throw UsageError("sampler 'translate': missing reference to the base sampler");
    const SamplerSpec* base = lookup ? lookup(t.reference) : nullptr;
    if (!base) throw UsageError("sampler 'translate': unknown reference '" + t.reference + "'");
    return translate(*base, parse_coords("z0", get("z0"), base->dim()));
  }
  throw UsageError("sampler: unknown kind '" + t.kind + "' (expected ball, cube, gauss, point or translate)");
}

namespace {

// E exp(a ||X||^2) for X ~ N(m, S), written in the eigenbasis of S.
double gaussian_square_mgf(const Eigen::VectorXd& eigvals, const Eigen::VectorXd& mean_rot, double a) {
  double log_val = 0.0;
  for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
    const double one_minus = 1.0 - 2.0 * a * eigvals[i];
    if (one_minus <= 0.0) return std::numeric_limits<double>::infinity();
    log_val += -0.5 * std::log(one_minus) + a * mean_rot[i] * mean_rot[i] / one_minus;
  }
  return std::exp(log_val);
}

}  // namespace

ConcentrationCertificate concentration_certificate(const SamplerSpec& spec, std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw UsageError("certificate needs at least one trial");
  const SamplerSpec flat = spec.flattened();
  ConcentrationCertificate cert;
  ConcentrationMeta meta;
  meta.beta = 2.0;
  if (flat.kind == SamplerSpec::Kind::kGaussian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(flat.covariance));
    const Eigen::VectorXd lam = eig.eigenvalues();
    Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(flat.center.data(), flat.dim());
    const Eigen::VectorXd m_rot = eig.eigenvectors().transpose() * m;
    auto integral = [&](double sigma) { return gaussian_square_mgf(lam, m_rot, 0.5 / (sigma * sigma)); };
    // Smallest sigma with integral <= 2, by bisection on the monotone map.
    double lo = std::sqrt(lam.maxCoeff()), hi = std::max(1.0, 2.0 * lo);
    while (integral(hi) > 2.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (integral(mid) > 2.0 ? lo : hi) = mid;
    }
    meta.sigma = hi * (1.0 + 1e-9);
    const Eigen::VectorXd inv_m = eig.eigenvectors() * (m_rot.array() / lam.array()).matrix();
    meta.gamma1 = 1.0 / lam.minCoeff();
    meta.gamma2 = inv_m.norm();
  } else {
    const double bound = flat.radius_bound();
    meta.sigma = bound > 0.0 ? bound : 1.0;
  }
  cert.meta = meta;

  CounterRng rng(seed);
  double mean = 0.0, m2 = 0.0;
  Vec x(flat.dim());
  for (std::int64_t t = 1; t <= trials; ++t) {
    draw_point(spec, rng, x.data());
    const double v = std::exp(0.5 * std::pow(norm2(x) / meta.sigma, meta.beta));
    const double delta = v - mean;
    mean += delta / static_cast<double>(t);
    m2 += delta * (v - mean);
  }
  cert.trials = trials;
  cert.mc_integral = mean;
  cert.mc_standard_error = trials > 1 ? std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials)) : 0.0;
  return cert;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kLocationFamily: return "location_family";
    case Provenance::kGaussianQuadratic: return "gaussian_quadratic";
    case Provenance::kIdenticalPair: return "identical_pair";
  }
  return "?";
}

namespace {

void note_unit_ball(GroundTruthPair& pair) {
  for (const SamplerSpec* s : {&pair.mu, &pair.nu}) {
    if (s->compact() && s->radius_bound() > 1.0)
      pair.notes.push_back("support of " + s->describe() + " leaves the unit ball; rates constants assume it is rescaled");
  }
}

void require_same_dim(const SamplerSpec& s, const CostSpec& cost) {
  if (s.dim() != cost.dim()) throw UsageError("sampler dimension does not match cost dimension");
}

}  // namespace

GroundTruthPair ground_truth_location(const SamplerSpec& mu, const Vec& z0, const CostSpec& cost) {
  require_same_dim(mu, cost);
  GroundTruthPair pair{mu, translate(mu, z0), cost, cost.h(z0), Provenance::kLocationFamily, {}};
  note_unit_ball(pair);
  return pair;
}

GroundTruthPair ground_truth_identical(const SamplerSpec& mu, const CostSpec& cost) {
  require_same_dim(mu, cost);
  GroundTruthPair pair{mu, mu, cost, 0.0, Provenance::kIdenticalPair, {}};
  note_unit_ball(pair);
  return pair;
}

GroundTruthPair ground_truth_gaussian_w2(const Vec& m1, const Matrix& s1, const Vec& m2, const Matrix& s2) {
  if (m1.size() != m2.size()) throw UsageError("gaussian means have different dimensions");
  const int d = static_cast<int>(m1.size());
  SamplerSpec mu = gaussian(m1, s1);
  SamplerSpec nu = gaussian(m2, s2);
  const Eigen::MatrixXd a = to_eigen(s1), b = to_eigen(s2);
  const Eigen::MatrixXd rb = to_eigen(sqrtm_psd(s2));
  Eigen::MatrixXd cross = rb * a * rb;
  cross = 0.5 * (cross + cross.transpose());
  const Eigen::MatrixXd cross_sqrt = to_eigen(sqrtm_psd(from_eigen(cross)));
  double mean_sq = 0.0;
  for (int k = 0; k < d; ++k) mean_sq += (m1[k] - m2[k]) * (m1[k] - m2[k]);
  const double value = mean_sq + (a + b - 2.0 * cross_sqrt).trace();
  return GroundTruthPair{std::move(mu), std::move(nu), CostSpec::power_lr(2.0, 2.0, d), std::max(0.0, value),
                         Provenance::kGaussianQuadratic, {}};
}

GroundTruthPair lb_construction(const Vec& x0, const Vec& y0, double radius, const CostSpec& cost) {
  if (x0.size() != y0.size()) throw UsageError("centres have different dimensions");
  Vec z0(x0.size());
  for (std::size_t k = 0; k < x0.size(); ++k) z0[k] = y0[k] - x0[k];
  GroundTruthPair pair{uniform_ball(x0, radius), uniform_ball(y0, radius), cost, cost.h(z0),
                       Provenance::kLocationFamily, {}};
  require_same_dim(pair.mu, cost);
  note_unit_ball(pair);
  return pair;
}

}  // namespace otrates
