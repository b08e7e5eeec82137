#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otrates/points.hpp"
#include "otrates/rng.hpp"

namespace otrates {

enum class CostFamily {
  kPowerLr,      // h(z) = ||z||_r^p
  kSmoothPower,  // h(z) = (||z||^2 + eps^{2/p})^{p/2} - eps
};

// Regularity constants attached to a cost. Lambda depends on the ball it is
// taken over, see CostSpec::lambda_on_ball.
struct RegularityMeta {
  double alpha = 2.0;     // Holder exponent in (0, 2]
  double growth_p = 2.0;  // polynomial growth order
  double kappa = 1.0;     // h(z) <= kappa ||z||^p and radial-derivative bracket
  std::optional<Vec> z0;  // reference point for the lower Taylor bound
  double h4_lambda = 0.0;
};

// Translation-invariant cost c(x, y) = h(x - y). Immutable.
class CostSpec {
 public:
  CostSpec() = default;  // power:p=2,r=2 in one dimension
  static CostSpec power_lr(double p, double r, int dim);
  static CostSpec smooth_power(double p, double eps, int dim);

  CostFamily family() const { return family_; }
  int dim() const { return dim_; }
  double p() const { return p_; }
  double r() const { return r_; }
  double eps() const { return eps_; }
  const RegularityMeta& meta() const { return meta_; }

  // True when h(z) depends on ||z||_2 only.
  bool radial() const { return family_ == CostFamily::kSmoothPower || r_ == 2.0; }

  double h(std::span<const double> z) const;
  // c(x, y) without bounds checks; both pointers address dim() doubles.
  double between(const double* x, const double* y) const;
  double operator()(std::span<const double> x, std::span<const double> y) const;

  // Throws DomainError at kinks (see grad_h).
  Vec grad(std::span<const double> z) const;

  // Radial profile h(z) = omega(||z||); only for radial() costs.
  double omega(double t) const;
  double omega_prime(double t) const;

  // sup of h over the Euclidean ball B(0, R).
  double sup_on_ball(double radius) const;
  // Upper estimate of 1 v ||h||_{C^alpha(B(0, R))}.
  double lambda_on_ball(double radius) const;

  // Copy with a lower-Taylor reference point attached.
  CostSpec with_reference_point(Vec z0, double lambda) const;

  // "power:p=2,r=2" / "smooth:p=1.5,eps=0.01"
  std::string name() const;

 private:
  double from_sq(double sq) const;

  CostFamily family_ = CostFamily::kPowerLr;
  int dim_ = 1;
  double p_ = 2.0;
  double r_ = 2.0;
  double eps_ = 0.0;
  double smooth_shift_ = 0.0;   // eps^{2/p}
  double smooth_offset_ = 0.0;  // (eps^{2/p})^{p/2}, equal to eps up to rounding
  RegularityMeta meta_;
};

double eval_cost(const CostSpec& cost, std::span<const double> x, std::span<const double> y);
double eval_h(const CostSpec& cost, std::span<const double> z);
Vec grad_h(const CostSpec& cost, std::span<const double> z);

// Uniformly within 2 eps of ||z||^p: h_{p,eps} for p <= 2, ||z||^p itself above.
CostSpec smooth_approx(double p, double eps, int dim);

// Parses "power:p=<f>,r=<f>" or "smooth:p=<f>,eps=<f>". Errors name the
// offending token.
CostSpec parse_cost(std::string_view text, int dim);

enum class Condition { kH0, kH1, kH3, kH4 };
std::string to_string(Condition c);
Condition parse_condition(std::string_view text);

struct Region {
  enum class Shape { kBall, kBox };
  Shape shape = Shape::kBall;
  Vec center;
  double extent = 1.0;  // radius or half width

  static Region ball(Vec center, double radius);
  static Region box(Vec center, double half_width);
  Vec draw(CounterRng& rng) const;
  double outer_radius() const;  // sup ||z|| over the region
};

struct ConditionReport {
  Condition condition = Condition::kH0;
  bool pass = false;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::int64_t trials = 0;
  std::vector<Vec> witnesses;  // points realising max_violation
  std::string detail;
};

// Sampling certificate for a structural condition; not a proof.
ConditionReport check_conditions(const CostSpec& cost, Condition condition, const Region& region,
                                 std::int64_t budget, std::uint64_t seed);

}  // namespace otrates
