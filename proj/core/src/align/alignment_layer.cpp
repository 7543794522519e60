#include "latalign/align/alignment_layer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latalign/error.hpp"

namespace latalign {

std::string_view to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::PlainBn: return "plain_bn";
    case AlignmentMode::AdaptiveBn: return "adaptive_bn";
    case AlignmentMode::Latent: return "latent";
  }
  return "plain_bn";
}

AlignmentMode parse_alignment_mode(std::string_view text) {
  if (text == "plain_bn" || text == "plain") return AlignmentMode::PlainBn;
  if (text == "adaptive_bn" || text == "adaptive") return AlignmentMode::AdaptiveBn;
  if (text == "latent") return AlignmentMode::Latent;
  fail(ErrorCode::ConfigInvalid, "unknown alignment mode '" + std::string(text) + "'");
}

AlignmentLayer::AlignmentLayer(std::size_t features, AlignmentMode mode, bool affine,
                               double epsilon, double momentum)
    : mode_(mode),
      affine_(affine),
      epsilon_(epsilon),
      momentum_(momentum),
      scale_(features, 1.0),
      shift_(features, 0.0),
      scale_grad_(features, 0.0),
      shift_grad_(features, 0.0) {
  require(features > 0, ErrorCode::InvalidArgument, "alignment layer needs at least one feature");
  require(epsilon >= 0.0, ErrorCode::InvalidArgument, "epsilon must be non-negative");
}

void AlignmentLayer::zero_grad() {
  std::fill(scale_grad_.begin(), scale_grad_.end(), 0.0);
  std::fill(shift_grad_.begin(), shift_grad_.end(), 0.0);
}

void AlignmentLayer::set_running_stats(ContextStats stats) {
  require(stats.features() == features(), ErrorCode::ShapeMismatch, "running stats size");
  running_var_.resize(features());
  for (std::size_t j = 0; j < features(); ++j) running_var_[j] = stats.std[j] * stats.std[j];
  running_ = std::move(stats);
}

void AlignmentLayer::set_context_stats(ContextStats stats) {
  require(stats.features() == features(), ErrorCode::ShapeMismatch, "context stats size");
  context_ = std::move(stats);
}

const ContextStats& AlignmentLayer::inference_stats() const {
  if (context_) return *context_;
  require(running_.has_value(), ErrorCode::NotTrained,
          "normalization layer has no running statistics");
  return *running_;
}

ContextStats AlignmentLayer::batch_stats(const Tensor& x,
                                         const std::vector<std::size_t>& trials) const {
  const std::size_t d = features();
  const std::size_t inner = x.inner_size();
  require(trials.size() >= 2, ErrorCode::SingleTrialContext,
          "a context needs at least two trials, got " + std::to_string(trials.size()));
  ContextStats stats;
  stats.mean.assign(d, 0.0);
  stats.std.assign(d, 0.0);
  stats.count = trials.size() * inner;
  const double m = static_cast<double>(stats.count);
  const double* px = x.data();
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i : trials) {
      const double* row = px + (i * d + j) * inner;
      for (std::size_t p = 0; p < inner; ++p) sum += row[p];
    }
    const double mean = sum / m;
    double ss = 0.0;
    for (std::size_t i : trials) {
      const double* row = px + (i * d + j) * inner;
      for (std::size_t p = 0; p < inner; ++p) ss += (row[p] - mean) * (row[p] - mean);
    }
    stats.mean[j] = mean;
    stats.std[j] = std::sqrt(ss / (m - 1.0));
  }
  return stats;
}

void AlignmentLayer::normalize(const Tensor& x, Tensor& y, const std::vector<std::size_t>& trials,
                               const ContextStats& stats, bool differentiable) {
  const std::size_t d = features();
  const std::size_t inner = x.inner_size();
  GroupCache cache;
  cache.trials = trials;
  cache.denom.resize(d);
  cache.std = differentiable ? stats.std : std::vector<double>{};
  cache.count = differentiable ? stats.count : 0;
  for (std::size_t j = 0; j < d; ++j) {
    const double denom = stats.std[j] + epsilon_;
    require(denom > 0.0, ErrorCode::NonFiniteInput,
            "zero-variance feature with epsilon = 0 cannot be standardized");
    cache.denom[j] = denom;
    const double inv = 1.0 / denom;
    const double mean = stats.mean[j];
    const double a = scale_[j];
    const double b = shift_[j];
    for (std::size_t i : trials) {
      const std::size_t off = (i * d + j) * inner;
      const double* src = x.data() + off;
      double* hat = normalized_.data() + off;
      double* dst = y.data() + off;
      for (std::size_t p = 0; p < inner; ++p) {
        hat[p] = (src[p] - mean) * inv;
        dst[p] = hat[p] * a + b;
      }
    }
  }
  cache_.push_back(std::move(cache));
}

void AlignmentLayer::update_running(const ContextStats& batch) {
  if (!running_) {
    set_running_stats(batch);
    return;
  }
  for (std::size_t j = 0; j < features(); ++j) {
    running_->mean[j] = (1.0 - momentum_) * running_->mean[j] + momentum_ * batch.mean[j];
    running_var_[j] = (1.0 - momentum_) * running_var_[j] + momentum_ * batch.std[j] * batch.std[j];
    running_->std[j] = std::sqrt(running_var_[j]);
  }
  running_->count = batch.count;
}

Tensor AlignmentLayer::forward(const Tensor& x, const AlignmentPass& pass) {
  require(x.rank() >= 2 && x.dim(1) == features(), ErrorCode::ShapeMismatch,
          "alignment layer expects " + std::to_string(features()) + " features, got " +
              x.shape_string());
  const std::size_t n = x.dim(0);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  Tensor y(x.shape());
  normalized_ = Tensor(x.shape());
  cache_.clear();

  if (pass.collect_context) {
    ContextStats stats = batch_stats(x, all);
    normalize(x, y, all, stats, false);
    context_ = std::move(stats);
    return y;
  }

  if (mode_ == AlignmentMode::Latent) {
    if (!pass.training && context_) {
      normalize(x, y, all, *context_, false);
      return y;
    }
    if (pass.groups == nullptr) {
      normalize(x, y, all, batch_stats(x, all), true);
      return y;
    }
    std::vector<char> seen(n, 0);
    for (const auto& group : *pass.groups) {
      for (std::size_t i : group) {
        require(i < n && !seen[i], ErrorCode::InvalidArgument,
                "subject groups must partition the batch");
        seen[i] = 1;
      }
      normalize(x, y, group, batch_stats(x, group), true);
    }
    require(std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; }),
            ErrorCode::InvalidArgument, "subject groups must cover every trial of the batch");
    return y;
  }

  if (pass.training) {
    ContextStats stats = batch_stats(x, all);
    update_running(stats);
    normalize(x, y, all, stats, true);
    return y;
  }
  normalize(x, y, all, inference_stats(), false);
  return y;
}

Tensor AlignmentLayer::backward(const Tensor& grad_output) {
  require(grad_output.shape() == normalized_.shape(), ErrorCode::ShapeMismatch,
          "gradient shape does not match last forward");
  const std::size_t d = features();
  const std::size_t inner = grad_output.inner_size();
  Tensor grad_input(grad_output.shape());
  const double* g = grad_output.data();
  const double* hat = normalized_.data();
  double* gi = grad_input.data();

  for (const GroupCache& cache : cache_) {
    for (std::size_t j = 0; j < d; ++j) {
      const double a = scale_[j];
      double sum_g = 0.0;
      double sum_g_hat = 0.0;
      for (std::size_t i : cache.trials) {
        const std::size_t off = (i * d + j) * inner;
        for (std::size_t p = 0; p < inner; ++p) {
          sum_g += g[off + p];
          sum_g_hat += g[off + p] * hat[off + p];
        }
      }
      if (affine_) {
        shift_grad_[j] += sum_g;
        scale_grad_[j] += sum_g_hat;
      }
      const double inv = 1.0 / cache.denom[j];
      if (cache.count == 0) {
        // Statistics were constants of this pass.
        for (std::size_t i : cache.trials) {
          const std::size_t off = (i * d + j) * inner;
          for (std::size_t p = 0; p < inner; ++p) gi[off + p] = g[off + p] * a * inv;
        }
        continue;
      }
      // xhat = (x - mean) / (s + eps),  s = sqrt(sum (x - mean)^2 / (m - 1))
      // dL/dx = a/D * (g - mean(g)) - a * (x - mean) * sum(g * (x - mean)) / (D^2 (m - 1) s)
      //       = a/D * (g - mean(g) - xhat * sum(g * xhat) * D / ((m - 1) s))
      const double m = static_cast<double>(cache.count);
      const double mean_g = sum_g / m;
      const double s = cache.std[j];
      const double coupling = s > 0.0 ? sum_g_hat * cache.denom[j] / ((m - 1.0) * s) : 0.0;
      for (std::size_t i : cache.trials) {
        const std::size_t off = (i * d + j) * inner;
        for (std::size_t p = 0; p < inner; ++p)
          gi[off + p] = a * inv * (g[off + p] - mean_g - hat[off + p] * coupling);
      }
    }
  }
  return grad_input;
}

Tensor latent_align(const Tensor& batch_features, AlignmentLayer& layer) {
  require(layer.mode() == AlignmentMode::Latent, ErrorCode::ModeMismatch,
          "latent_align requires a layer in latent mode, got " +
              std::string(to_string(layer.mode())));
  require(batch_features.rank() >= 2 && batch_features.dim(0) >= 2,
          ErrorCode::SingleTrialContext, "latent alignment needs at least two trials");
  AlignmentPass pass;
  pass.training = true;
  return layer.forward(batch_features, pass);
}

}  // namespace latalign
