#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otrates/costs.hpp"
#include "otrates/points.hpp"

namespace otrates {

// Weighted point cloud; empirical measures carry uniform weights.
struct DiscreteMeasure {
  PointCloud points;
  std::vector<double> weights;

  static DiscreteMeasure uniform(PointCloud points);
  std::size_t size() const { return points.size(); }
  int dim() const { return points.dim(); }
  // Throws UsageError unless weights are nonnegative and sum to 1 within tol.
  void validate(double tol = 1e-12) const;
};

// Square, symmetric matrix in row-major order.
struct Matrix {
  int n = 0;
  std::vector<double> a;
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  static Matrix identity(int n, double scale = 1.0);
};

struct SamplerSpec {
  enum class Kind { kUniformBall, kUniformCube, kGaussian, kPointMass, kTranslate };

  Kind kind = Kind::kPointMass;
  Vec center;    // ball/cube centre, gaussian mean, point-mass location, or translation z0
  double extent = 0.0;  // ball radius or cube half width
  Matrix covariance;
  Matrix cov_sqrt;  // symmetric square root, filled by the gaussian factory
  std::shared_ptr<const SamplerSpec> inner;

  int dim() const { return static_cast<int>(center.size()); }
  // Resolves nested translations into an equivalent base sampler (in law).
  SamplerSpec flattened() const;
  std::string describe() const;
  // True when the support is bounded; radius_bound() is then sup ||x||.
  bool compact() const;
  double radius_bound() const;
};

SamplerSpec uniform_ball(Vec center, double radius);
SamplerSpec uniform_cube(Vec center, double half_width);
SamplerSpec gaussian(Vec mean, Matrix covariance);
SamplerSpec point_mass(Vec x);
SamplerSpec translate(SamplerSpec inner, Vec z0);

// Draws n i.i.d. points with uniform weights; deterministic in (spec, n, seed).
DiscreteMeasure sample(const SamplerSpec& spec, std::size_t n, std::uint64_t seed);
PointCloud sample_points(const SamplerSpec& spec, std::size_t n, std::uint64_t seed);

// Parses "ball:c=...;r=...", "cube:c=...;h=...", "gauss:m=...;cov=I|diag:...|<full>",
// "point:x=...", "translate:<name>;z0=...". A single coordinate broadcasts to
// dimension d when "d=<int>" is given. `lookup` resolves translate references.
SamplerSpec parse_sampler(std::string_view text,
                          const std::function<const SamplerSpec*(std::string_view)>& lookup = {});

struct ConcentrationMeta {
  double sigma = 1.0;
  double beta = 2.0;
  std::optional<double> gamma1;
  std::optional<double> gamma2;
};

struct ConcentrationCertificate {
  std::optional<ConcentrationMeta> meta;  // analytic certificate when available
  double mc_integral = 0.0;               // Monte-Carlo estimate of E exp((||X||/sigma)^beta / 2)
  double mc_standard_error = 0.0;
  std::int64_t trials = 0;
};

ConcentrationCertificate concentration_certificate(const SamplerSpec& spec, std::int64_t trials,
                                                   std::uint64_t seed);

enum class Provenance { kLocationFamily, kGaussianQuadratic, kIdenticalPair };
std::string to_string(Provenance p);

struct GroundTruthPair {
  SamplerSpec mu;
  SamplerSpec nu;
  CostSpec cost;
  double exact_value = 0.0;
  Provenance provenance = Provenance::kIdenticalPair;
  std::vector<std::string> notes;  // e.g. supports leaving the unit ball
};

GroundTruthPair ground_truth_location(const SamplerSpec& mu, const Vec& z0, const CostSpec& cost);
GroundTruthPair ground_truth_identical(const SamplerSpec& mu, const CostSpec& cost);
GroundTruthPair ground_truth_gaussian_w2(const Vec& m1, const Matrix& s1, const Vec& m2, const Matrix& s2);
GroundTruthPair lb_construction(const Vec& x0, const Vec& y0, double radius, const CostSpec& cost);

// Symmetric PSD square root via eigendecomposition with eigenvalue floor 1e-12.
Matrix sqrtm_psd(const Matrix& m);
// Throws UsageError unless m is symmetric positive definite.
void require_spd(const Matrix& m, const char* what);

}  // namespace otrates
