#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial twin with the
// same arithmetic, kept as the reference the parallel path is tested against.
// Results never depend on the thread count: every output element is written
// by exactly one iteration and no reductions change their order.

#include <cstddef>
#include <span>
#include <vector>

#include "otrates/costs.hpp"
#include "otrates/points.hpp"

namespace otrates::kernels {

// Dense row-major cost matrix C[i][j] = c(x_i, y_j).
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
};

// threads <= 0 uses the OpenMP default.
CostMatrix cost_matrix(const PointCloud& x, const PointCloud& y, const CostSpec& cost, int threads = 0);
CostMatrix cost_matrix_serial(const PointCloud& x, const PointCloud& y, const CostSpec& cost);

void cost_row(const PointCloud& x, std::size_t i, const PointCloud& y, const CostSpec& cost, std::span<double> out);

// out[q] = min_j { c(query_q, anchor_j) - values_j }
void min_plus(const PointCloud& anchors, std::span<const double> values, const CostSpec& cost,
              const PointCloud& queries, std::span<double> out, int threads = 0);
void min_plus_serial(const PointCloud& anchors, std::span<const double> values, const CostSpec& cost,
                     const PointCloud& queries, std::span<double> out);

// True when no entry is NaN or infinite.
bool all_finite(std::span<const double> values);

}  // namespace otrates::kernels
