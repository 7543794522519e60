#pragma once

#include <Eigen/Dense>

#include "latalign/tensor.hpp"

namespace latalign {

/// Average spatial covariance of one subject and its inverse Cholesky factor.
struct SpatialWhitener {
  Eigen::MatrixXd sigma;             // regularized covariance, [c x c]
  Eigen::MatrixXd whitening_factor;  // L^-1 with sigma = L L^T, lower triangular
  double regularization = 0.0;       // absolute ridge added to the diagonal

  std::size_t channels() const noexcept { return static_cast<std::size_t>(sigma.rows()); }
};

/// Recenters each electrode of each trial and divides the trial by its
/// average global field power (time-averaged std across electrodes).
Tensor recenter_and_rescale(const Tensor& trials);

/// Mean over trials of X X^T / t, with X already recentered and rescaled.
Eigen::MatrixXd average_spatial_covariance(const Tensor& prepared_trials);

/// Fits on a [n x c x t] context. The ridge is relative_ridge * trace / c; a
/// failed factorization is retried once with a 1e-4 relative ridge.
SpatialWhitener fit_whitener(const Tensor& trials, double relative_ridge = 1e-6);

/// Builds a whitener directly from a covariance (used when the covariance is known).
SpatialWhitener whitener_from_covariance(const Eigen::MatrixXd& covariance,
                                         double relative_ridge = 1e-6);

/// Applies the same recenter/rescale as fitting, then multiplies each trial by L^-1.
Tensor euclidean_align(const Tensor& trials, const SpatialWhitener& whitener);

}  // namespace latalign
