#include "otrates/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

#include "otrates/error.hpp"

namespace otrates::kernels {

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

void check_dims(const PointCloud& a, const PointCloud& b, const CostSpec& cost) {
  if (a.dim() != cost.dim() || b.dim() != cost.dim())
    throw UsageError("point dimension does not match cost dimension " + std::to_string(cost.dim()));
}

double min_plus_one(const PointCloud& anchors, std::span<const double> values, const CostSpec& cost,
                    const double* q) {
  double best = std::numeric_limits<double>::infinity();
  const double* a = anchors.data();
  const int d = anchors.dim();
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    const double v = cost.between(q, a + j * d) - values[j];
    if (v < best) best = v;
  }
  return best;
}

}  // namespace

CostMatrix cost_matrix(const PointCloud& x, const PointCloud& y, const CostSpec& cost, int threads) {
  check_dims(x, y, cost);
  CostMatrix m{x.size(), y.size(), std::vector<double>(x.size() * y.size())};
  const long long rows = static_cast<long long>(m.rows);
  const int d = cost.dim();
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (long long i = 0; i < rows; ++i) {
    const double* xi = x.data() + i * d;
    double* out = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) out[j] = cost.between(xi, y.data() + j * d);
  }
  return m;
}

CostMatrix cost_matrix_serial(const PointCloud& x, const PointCloud& y, const CostSpec& cost) {
  check_dims(x, y, cost);
  CostMatrix m{x.size(), y.size(), std::vector<double>(x.size() * y.size())};
  const int d = cost.dim();
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m.data[i * m.cols + j] = cost.between(x.data() + i * d, y.data() + j * d);
  return m;
}

void cost_row(const PointCloud& x, std::size_t i, const PointCloud& y, const CostSpec& cost, std::span<double> out) {
  const int d = cost.dim();
  const double* xi = x.data() + i * d;
  for (std::size_t j = 0; j < y.size(); ++j) out[j] = cost.between(xi, y.data() + j * d);
}

void min_plus(const PointCloud& anchors, std::span<const double> values, const CostSpec& cost,
              const PointCloud& queries, std::span<double> out, int threads) {
  check_dims(anchors, queries, cost);
  const long long n = static_cast<long long>(queries.size());
  const int d = cost.dim();
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
  for (long long q = 0; q < n; ++q) out[q] = min_plus_one(anchors, values, cost, queries.data() + q * d);
}

void min_plus_serial(const PointCloud& anchors, std::span<const double> values, const CostSpec& cost,
                     const PointCloud& queries, std::span<double> out) {
  check_dims(anchors, queries, cost);
  const int d = cost.dim();
  for (std::size_t q = 0; q < queries.size(); ++q) out[q] = min_plus_one(anchors, values, cost, queries.data() + q * d);
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace otrates::kernels
