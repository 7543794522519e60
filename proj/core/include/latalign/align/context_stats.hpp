#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latalign/tensor.hpp"

namespace latalign {

/// Per-feature mean and sample standard deviation of a subject's context set.
struct ContextStats {
  std::vector<double> mean;
  std::vector<double> std;
  /// Number of pooled samples (trials times time points) behind the estimate.
  std::size_t count = 0;

  std::size_t features() const noexcept { return mean.size(); }
};

/// Streaming per-feature mean/variance. Blocks are folded in with the
/// pairwise (Chan et al.) update, so adding trials one at a time gives the
/// same result as one batch up to rounding.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::size_t features);

  /// Adds every trial of a tensor shaped [n x d] or [n x d x ...].
  void add(const Tensor& features);
  /// Adds a block of samples for a single feature.
  void add_block(std::size_t feature, std::span<const double> samples);
  void merge(const StatsAccumulator& other);

  std::size_t features() const noexcept { return mean_.size(); }
  std::size_t count(std::size_t feature = 0) const { return count_.at(feature); }

  /// Finalizes with the n - 1 denominator. Throws SingleTrialContext if fewer than two samples.
  ContextStats finish() const;

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::vector<std::size_t> count_;
};

/// Mean and sample std per feature, pooling the trial axis with every axis after the feature axis.
ContextStats compute_context_stats(const Tensor& features);

}  // namespace latalign
