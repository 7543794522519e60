#include "latalign/align/whitening.hpp"

#include <cmath>

#include "latalign/error.hpp"
#include "latalign/log.hpp"

namespace latalign {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_trials(const Tensor& trials) {
  require(trials.rank() == 3, ErrorCode::ShapeMismatch,
          "trials must be [n x c x t], got " + trials.shape_string());
  require(trials.dim(0) >= 1 && trials.dim(1) >= 1 && trials.dim(2) >= 1,
          ErrorCode::ShapeMismatch, "empty trial tensor");
  require(trials.all_finite(), ErrorCode::NonFiniteInput, "trials contain NaN or Inf");
}

}  // namespace

Tensor recenter_and_rescale(const Tensor& trials) {
  check_trials(trials);
  const auto c = static_cast<Eigen::Index>(trials.dim(1));
  const auto t = static_cast<Eigen::Index>(trials.dim(2));
  Tensor out(trials.shape());
  for (std::size_t i = 0; i < trials.dim(0); ++i) {
    Eigen::Map<const RowMatrix> x(trials.trial(i).data(), c, t);
    Eigen::Map<RowMatrix> y(out.trial(i).data(), c, t);
    y = x.colwise() - x.rowwise().mean();
    double gfp = 0.0;
    if (c > 1) {
      // std across electrodes at each time point, then averaged over time
      const Eigen::RowVectorXd spatial_mean = y.colwise().mean();
      gfp = ((y.rowwise() - spatial_mean).array().square().colwise().sum() / double(c))
                .sqrt()
                .mean();
    }
    if (!(gfp > 1e-300)) gfp = std::sqrt(y.array().square().mean());
    if (gfp > 1e-300) y /= gfp;
  }
  return out;
}

Eigen::MatrixXd average_spatial_covariance(const Tensor& prepared) {
  check_trials(prepared);
  const auto c = static_cast<Eigen::Index>(prepared.dim(1));
  const auto t = static_cast<Eigen::Index>(prepared.dim(2));
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t i = 0; i < prepared.dim(0); ++i) {
    Eigen::Map<const RowMatrix> x(prepared.trial(i).data(), c, t);
    sigma.noalias() += x * x.transpose() / double(t);
  }
  sigma /= double(prepared.dim(0));
  return 0.5 * (sigma + sigma.transpose());
}

SpatialWhitener whitener_from_covariance(const Eigen::MatrixXd& covariance, double relative_ridge) {
  require(covariance.rows() == covariance.cols() && covariance.rows() > 0,
          ErrorCode::ShapeMismatch, "covariance must be square");
  const auto c = covariance.rows();
  const double scale = covariance.trace() / double(c);
  for (double rel : {relative_ridge, 1e-4}) {
    SpatialWhitener w;
    w.regularization = rel * scale;
    w.sigma = covariance + w.regularization * Eigen::MatrixXd::Identity(c, c);
    Eigen::LLT<Eigen::MatrixXd> llt(w.sigma);
    if (llt.info() != Eigen::Success || !(scale > 0.0)) continue;
    const Eigen::MatrixXd lower = llt.matrixL();
    w.whitening_factor = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(c, c));
    if (!w.whitening_factor.allFinite()) continue;
    return w;
  }
  fail(ErrorCode::SingularCovariance,
       "spatial covariance is not positive definite after regularization");
}

SpatialWhitener fit_whitener(const Tensor& trials, double relative_ridge) {
  check_trials(trials);
  if (trials.dim(2) <= trials.dim(1))
    log_warning("fit_whitener: " + std::to_string(trials.dim(2)) + " samples for " +
                std::to_string(trials.dim(1)) + " channels; covariance may be rank deficient");
  return whitener_from_covariance(average_spatial_covariance(recenter_and_rescale(trials)),
                                  relative_ridge);
}

Tensor euclidean_align(const Tensor& trials, const SpatialWhitener& whitener) {
  check_trials(trials);
  require(trials.dim(1) == whitener.channels(), ErrorCode::ShapeMismatch,
          "whitener fitted on " + std::to_string(whitener.channels()) + " channels, trials have " +
              std::to_string(trials.dim(1)));
  Tensor out = recenter_and_rescale(trials);
  const auto c = static_cast<Eigen::Index>(trials.dim(1));
  const auto t = static_cast<Eigen::Index>(trials.dim(2));
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    Eigen::Map<RowMatrix> y(out.trial(i).data(), c, t);
    const RowMatrix whitened = whitener.whitening_factor * y;
    y = whitened;
  }
  return out;
}

}  // namespace latalign
