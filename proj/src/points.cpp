#include "otrates/points.hpp"

#include <cmath>
#include <stdexcept>

#include "otrates/error.hpp"

namespace otrates {

PointCloud::PointCloud(int dim, std::size_t count)
    : dim_(dim), coords_(static_cast<std::size_t>(dim) * count, 0.0) {
  if (dim < 1) throw UsageError("point dimension must be positive");
}

PointCloud::PointCloud(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim < 1) throw UsageError("point dimension must be positive");
  if (coords_.size() % dim != 0) throw UsageError("coordinate count is not a multiple of the dimension");
}

void PointCloud::push_back(std::span<const double> p) {
  if (dim_ == 0) dim_ = static_cast<int>(p.size());
  if (static_cast<int>(p.size()) != dim_) throw UsageError("point dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointCloud::append(const PointCloud& other) {
  if (other.empty()) return;
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw UsageError("point dimension mismatch");
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace otrates
