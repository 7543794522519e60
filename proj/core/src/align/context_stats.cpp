#include "latalign/align/context_stats.hpp"

#include <cmath>

#include "latalign/error.hpp"

namespace latalign {

StatsAccumulator::StatsAccumulator(std::size_t features)
    : mean_(features, 0.0), m2_(features, 0.0), count_(features, 0) {}

void StatsAccumulator::add_block(std::size_t feature, std::span<const double> samples) {
  if (samples.empty()) return;
  double block_mean = 0.0;
  for (double v : samples) {
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "non-finite feature value");
    block_mean += v;
  }
  const double nb = static_cast<double>(samples.size());
  block_mean /= nb;
  double block_m2 = 0.0;
  for (double v : samples) block_m2 += (v - block_mean) * (v - block_mean);

  const double na = static_cast<double>(count_[feature]);
  const double n = na + nb;
  const double delta = block_mean - mean_[feature];
  mean_[feature] += delta * nb / n;
  m2_[feature] += block_m2 + delta * delta * na * nb / n;
  count_[feature] += samples.size();
}

void StatsAccumulator::add(const Tensor& features) {
  require(features.rank() >= 2, ErrorCode::ShapeMismatch,
          "features must be [n x d] or [n x d x t], got " + features.shape_string());
  require(features.dim(1) == this->features(), ErrorCode::ShapeMismatch,
          "feature count mismatch");
  const std::size_t n = features.dim(0);
  const std::size_t d = features.dim(1);
  const std::size_t inner = features.inner_size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      add_block(j, features.values().subspan((i * d + j) * inner, inner));
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  require(other.features() == features(), ErrorCode::ShapeMismatch, "feature count mismatch");
  for (std::size_t j = 0; j < features(); ++j) {
    if (other.count_[j] == 0) continue;
    const double na = static_cast<double>(count_[j]);
    const double nb = static_cast<double>(other.count_[j]);
    const double n = na + nb;
    const double delta = other.mean_[j] - mean_[j];
    mean_[j] += delta * nb / n;
    m2_[j] += other.m2_[j] + delta * delta * na * nb / n;
    count_[j] += other.count_[j];
  }
}

ContextStats StatsAccumulator::finish() const {
  ContextStats stats;
  stats.mean = mean_;
  stats.std.resize(features());
  stats.count = count_.empty() ? 0 : count_[0];
  for (std::size_t j = 0; j < features(); ++j) {
    require(count_[j] >= 2, ErrorCode::SingleTrialContext,
            "context statistics need at least two samples, got " + std::to_string(count_[j]));
    stats.std[j] = std::sqrt(std::max(0.0, m2_[j] / static_cast<double>(count_[j] - 1)));
  }
  return stats;
}

ContextStats compute_context_stats(const Tensor& features) {
  require(features.rank() >= 2, ErrorCode::ShapeMismatch,
          "features must be [n x d] or [n x d x t], got " + features.shape_string());
  StatsAccumulator acc(features.dim(1));
  acc.add(features);
  return acc.finish();
}

}  // namespace latalign
