#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace latalign {

/// Dense row-major tensor of doubles. Axis 0 is always the trial axis.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Number of elements in one trial (product of all axes but the first).
  std::size_t trial_size() const noexcept;
  std::span<double> trial(std::size_t i) noexcept;
  std::span<const double> trial(std::size_t i) const noexcept;

  /// Product of the axes after axis 1, i.e. the per-feature extent of one trial.
  std::size_t inner_size() const noexcept;

  void reshape(Shape shape);
  Tensor reshaped(Shape shape) const;
  void fill(double value);

  /// Stacks the given trials (axis-0 slices) into a new tensor.
  Tensor select(std::span<const std::size_t> trials) const;

  bool all_finite() const noexcept;

  std::string shape_string() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t element_count(const Tensor::Shape& shape);

double max_abs_difference(const Tensor& a, const Tensor& b);

}  // namespace latalign
