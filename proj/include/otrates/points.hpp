#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace otrates {

using Vec = std::vector<double>;

// Row-major cloud of points in R^d.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(int dim, std::size_t count);
  PointCloud(int dim, std::vector<double> coords);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> operator[](std::size_t i) {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  const double* data() const { return coords_.data(); }
  const std::vector<double>& coords() const { return coords_; }

  void push_back(std::span<const double> p);
  void append(const PointCloud& other);

  bool operator==(const PointCloud&) const = default;

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

double norm2(std::span<const double> v);
double squared_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace otrates
