#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "otrates/measures.hpp"

namespace otrates {

struct Metric {
  enum class Kind { kCost, kWasserstein };
  Kind kind = Kind::kCost;
  double p = 1.0;       // W_p order
  double delta0 = 0.0;  // lower bound on the population W_p

  std::string to_string() const;
  static Metric parse(std::string_view text);
  bool operator==(const Metric&) const = default;
};

struct ExperimentConfig {
  GroundTruthPair pair;
  std::vector<std::size_t> n_grid{128, 256, 512, 1024, 2048};
  int reps = 100;
  std::uint64_t master_seed = 0;
  Metric metric;
  int threads = 0;  // <= 0: OpenMP default

  void validate() const;
};

struct RateRow {
  std::size_t n = 0;
  double delta_hat = 0.0;
  double se = 0.0;
  int reps = 0;              // successful replications
  double signed_mean = 0.0;  // mean of estimate - exact; sign is not asserted
  int failed = 0;
};

struct RateReport {
  double exact_value = 0.0;
  std::vector<RateRow> per_n;
  // Per n, per replication; NaN marks a failed replication.
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> errors;
  std::optional<double> slope;
  std::optional<std::pair<double, double>> slope_ci;
  std::optional<double> baseline_slope;
  int bootstrap = 0;
  // Worst duality certificate over the successful replications.
  double max_rel_gap = 0.0;  // |primal - dual| / (1 + |value|)
  double max_dual_infeasibility = 0.0;
};

// Monte-Carlo over the grid: replication r at size n solves an assignment
// between n fresh draws of mu and n independent draws of nu.
RateReport estimate_delta(const ExperimentConfig& config);
// Same replications run in order on one thread; reference for tests.
RateReport estimate_delta_serial(const ExperimentConfig& config);

// Builds rows from per-replication errors (used after any transformation).
void summarize(RateReport& report);

// OLS slope of log delta_hat on log n with a percentile bootstrap CI over
// resampled per-replication errors.
RateReport fit_slope(RateReport report, int bootstrap, std::uint64_t seed = 0);

struct RegimeComparison {
  double difference = 0.0;  // a.slope - b.slope
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};
RegimeComparison compare_regimes(const RateReport& a, const RateReport& b, int bootstrap, std::uint64_t seed = 0);

// Errors become |estimate^(1/p) - exact^(1/p)|; the slope is cleared.
RateReport to_wasserstein_units(const RateReport& report, double p, double delta0);

double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

// CSV renderings shared by the CLI and the tests.
std::string samples_csv(const RateReport& report);
std::string summary_csv(const RateReport& report);
std::string slope_txt(const RateReport& report);

// FNV-1a over the report's grid and per-replication errors.
std::uint64_t content_hash(const RateReport& report);

}  // namespace otrates
