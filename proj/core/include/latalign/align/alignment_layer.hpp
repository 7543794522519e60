#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "latalign/align/context_stats.hpp"
#include "latalign/tensor.hpp"

namespace latalign {

enum class AlignmentMode { PlainBn, AdaptiveBn, Latent };

std::string_view to_string(AlignmentMode mode);
AlignmentMode parse_alignment_mode(std::string_view text);

/// Trial indices of one subject context inside a batch.
using SubjectGroups = std::vector<std::vector<std::size_t>>;

/// How statistics are sourced during one forward pass.
struct AlignmentPass {
  bool training = false;
  /// Latent mode: one context per group. Null means the whole batch is one context.
  const SubjectGroups* groups = nullptr;
  /// Adaptation pass: statistics of the whole batch are stored as the layer's
  /// context statistics and then applied.
  bool collect_context = false;
};

/// Normalization site of a host model. Depending on the mode it acts as
/// ordinary batch normalization (running statistics at inference), as the
/// same layer with statistics replaced by a target context, or as subject-wise
/// standardization computed on the fly for every context:
///
///     y = (x - mean) / (std + epsilon) * scale + shift
///
/// Features live on axis 1; axis 0 and all axes after 1 are pooled. The
/// standard deviation uses the n - 1 denominator in every mode.
class AlignmentLayer {
 public:
  AlignmentLayer(std::size_t features, AlignmentMode mode, bool affine = true,
                 double epsilon = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& x, const AlignmentPass& pass);
  /// Gradient w.r.t. the input of the last forward call; accumulates scale/shift gradients.
  Tensor backward(const Tensor& grad_output);

  AlignmentMode mode() const noexcept { return mode_; }
  void set_mode(AlignmentMode mode) noexcept { mode_ = mode; }
  bool affine() const noexcept { return affine_; }
  std::size_t features() const noexcept { return scale_.size(); }
  double epsilon() const noexcept { return epsilon_; }

  std::vector<double>& scale() noexcept { return scale_; }
  const std::vector<double>& scale() const noexcept { return scale_; }
  std::vector<double>& shift() noexcept { return shift_; }
  const std::vector<double>& shift() const noexcept { return shift_; }
  std::vector<double>& scale_grad() noexcept { return scale_grad_; }
  std::vector<double>& shift_grad() noexcept { return shift_grad_; }
  void zero_grad();

  const std::optional<ContextStats>& running_stats() const noexcept { return running_; }
  void set_running_stats(ContextStats stats);

  const std::optional<ContextStats>& context_stats() const noexcept { return context_; }
  void set_context_stats(ContextStats stats);
  void clear_context_stats() noexcept { context_.reset(); }

  /// Statistics applied at inference in the batch-norm modes: the context
  /// statistics when present, otherwise the running statistics.
  const ContextStats& inference_stats() const;

 private:
  struct GroupCache {
    std::vector<std::size_t> trials;
    std::vector<double> denom;  // std + epsilon
    std::vector<double> std;
    std::size_t count = 0;
  };

  ContextStats batch_stats(const Tensor& x, const std::vector<std::size_t>& trials) const;
  void normalize(const Tensor& x, Tensor& y, const std::vector<std::size_t>& trials,
                 const ContextStats& stats, bool differentiable);
  void update_running(const ContextStats& batch);

  AlignmentMode mode_;
  bool affine_;
  double epsilon_;
  double momentum_;
  std::vector<double> scale_, shift_, scale_grad_, shift_grad_;
  std::optional<ContextStats> running_;
  std::vector<double> running_var_;
  std::optional<ContextStats> context_;

  Tensor normalized_;
  std::vector<GroupCache> cache_;
};

/// Subject-wise standardization of a single context: statistics are computed
/// over the whole batch regardless of any stored statistics. The layer keeps
/// the cache, so layer.backward() differentiates through mean and std.
Tensor latent_align(const Tensor& batch_features, AlignmentLayer& layer);

}  // namespace latalign
