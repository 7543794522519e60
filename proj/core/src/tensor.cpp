#include "latalign/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "latalign/error.hpp"

namespace latalign {

std::size_t element_count(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  require(values_.size() == element_count(shape_), ErrorCode::ShapeMismatch,
          "value count does not match shape " + shape_string());
}

std::size_t Tensor::trial_size() const noexcept {
  if (shape_.empty() || shape_[0] == 0) return 0;
  return values_.size() / shape_[0];
}

std::span<double> Tensor::trial(std::size_t i) noexcept {
  const std::size_t n = trial_size();
  return {values_.data() + i * n, n};
}

std::span<const double> Tensor::trial(std::size_t i) const noexcept {
  const std::size_t n = trial_size();
  return {values_.data() + i * n, n};
}

std::size_t Tensor::inner_size() const noexcept {
  std::size_t inner = 1;
  for (std::size_t a = 2; a < shape_.size(); ++a) inner *= shape_[a];
  return inner;
}

void Tensor::reshape(Shape shape) {
  require(element_count(shape) == values_.size(), ErrorCode::ShapeMismatch,
          "cannot reshape " + shape_string());
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

Tensor Tensor::select(std::span<const std::size_t> trials) const {
  Shape shape = shape_;
  shape.at(0) = trials.size();
  Tensor out(shape);
  const std::size_t n = trial_size();
  for (std::size_t k = 0; k < trials.size(); ++k) {
    require(trials[k] < shape_[0], ErrorCode::InvalidArgument, "trial index out of range");
    std::copy_n(values_.data() + trials[k] * n, n, out.values_.data() + k * n);
  }
  return out;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (a) s += " x ";
    s += std::to_string(shape_[a]);
  }
  return s + "]";
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorCode::ShapeMismatch,
          a.shape_string() + " vs " + b.shape_string());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace latalign
