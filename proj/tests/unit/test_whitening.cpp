#include "latalign/align/whitening.hpp"

#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

// Correlated multichannel trials: mixing * white noise plus per-channel offsets.
Tensor correlated_trials(std::size_t n, std::size_t c, std::size_t t, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd mix(c, c);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = rng.normal();
  mix += 2.0 * Eigen::MatrixXd::Identity(c, c);
  Tensor out({n, c, t});
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd z(c, t);
    for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = rng.normal();
    Eigen::MatrixXd x = mix * z;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t s = 0; s < t; ++s)
        out[(i * c + ch) * t + s] = x(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(s)) + 3.0 * ch;
  }
  return out;
}

}  // namespace

TEST(Whitening, IdentityCovarianceGivesIdentityFactor) {
  const SpatialWhitener w = whitener_from_covariance(Eigen::MatrixXd::Identity(4, 4));
  EXPECT_LT((w.whitening_factor - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-6);
}

TEST(Whitening, DiagonalCovariance) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
  sigma(0, 0) = 4.0;
  sigma(1, 1) = 9.0;
  const SpatialWhitener w = whitener_from_covariance(sigma);
  EXPECT_NEAR(w.whitening_factor(0, 0), 0.5, 1e-6);
  EXPECT_NEAR(w.whitening_factor(1, 1), 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(w.whitening_factor(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(w.whitening_factor(1, 0), 0.0, 1e-12);

  // Rows of the prepared input are scaled by 1/2 and 1/3.
  const Tensor x = random_tensor({3, 2, 10}, 5);
  const Tensor prepared = recenter_and_rescale(x);
  const Tensor y = euclidean_align(x, w);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t s = 0; s < 10; ++s) {
      EXPECT_NEAR(y[(i * 2 + 0) * 10 + s], prepared[(i * 2 + 0) * 10 + s] * w.whitening_factor(0, 0), 1e-12);
      EXPECT_NEAR(y[(i * 2 + 1) * 10 + s], prepared[(i * 2 + 1) * 10 + s] * w.whitening_factor(1, 1), 1e-12);
    }
}

TEST(Whitening, IdentityWhitenerReturnsPreparedInput) {
  const Tensor x = random_tensor({4, 3, 16}, 7, 2.0, 1.0);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  SpatialWhitener w{eye, eye, 0.0};
  EXPECT_LT(max_abs_difference(euclidean_align(x, w), recenter_and_rescale(x)), 1e-12);
}

TEST(Whitening, RecenterAndRescale) {
  const Tensor x = random_tensor({2, 3, 50}, 9, 4.0, 7.0);
  const Tensor p = recenter_and_rescale(x);
  for (std::size_t i = 0; i < 2; ++i) {
    double gfp = 0.0;
    for (std::size_t s = 0; s < 50; ++s) {
      double mean = 0.0, ss = 0.0;
      for (std::size_t ch = 0; ch < 3; ++ch) mean += p[(i * 3 + ch) * 50 + s];
      mean /= 3.0;
      for (std::size_t ch = 0; ch < 3; ++ch) ss += std::pow(p[(i * 3 + ch) * 50 + s] - mean, 2);
      gfp += std::sqrt(ss / 3.0);
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double m = 0.0;
      for (std::size_t s = 0; s < 50; ++s) m += p[(i * 3 + ch) * 50 + s];
      EXPECT_NEAR(m / 50.0, 0.0, 1e-12);
    }
    EXPECT_NEAR(gfp / 50.0, 1.0, 1e-9);
  }
}

TEST(Whitening, RandomTrialsAreWhitened) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Tensor x = correlated_trials(20, 6, 128, seed);
    const SpatialWhitener w = fit_whitener(x);
    EXPECT_LT((w.sigma - w.sigma.transpose()).norm(), 1e-9);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w.sigma).eigenvalues().minCoeff(), 0.0);
    EXPECT_LT((w.whitening_factor * w.sigma * w.whitening_factor.transpose() - Eigen::MatrixXd::Identity(6, 6)).norm(),
              1e-6);
    EXPECT_TRUE(w.whitening_factor.isLowerTriangular(1e-14));
    const Eigen::MatrixXd cov = average_spatial_covariance(euclidean_align(x, w));
    // The fitted ridge shifts the result by at most its own size.
    const double ridge = w.regularization * w.whitening_factor.squaredNorm();
    EXPECT_LT((cov - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-4 + ridge);
  }
}

TEST(Whitening, CovarianceOracle) {
  const Tensor x = correlated_trials(5, 3, 40, 4);
  const Tensor p = recenter_and_rescale(x);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    Eigen::MatrixXd xi(3, 40);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t s = 0; s < 40; ++s)
        xi(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(s)) = p[(i * 3 + ch) * 40 + s];
    expected += xi * xi.transpose() / 40.0;
  }
  expected /= 5.0;
  EXPECT_LT((average_spatial_covariance(p) - expected).norm(), 1e-12);
}

TEST(Whitening, ScaleInvariance) {
  const Tensor x = correlated_trials(10, 4, 64, 5);
  Tensor scaled = x;
  for (double& v : scaled.values()) v *= 37.5;
  const Tensor a = euclidean_align(x, fit_whitener(x));
  const Tensor b = euclidean_align(scaled, fit_whitener(scaled));
  EXPECT_LT(max_abs_difference(a, b), 1e-6);
}

TEST(Whitening, RankDeficientInputIsRegularized) {
  // Channel 1 duplicates channel 0, so the raw covariance is singular.
  Tensor x = correlated_trials(6, 3, 32, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t s = 0; s < 32; ++s) x[(i * 3 + 1) * 32 + s] = x[(i * 3 + 0) * 32 + s];
  const SpatialWhitener w = fit_whitener(x);
  EXPECT_GT(w.regularization, 0.0);
  EXPECT_TRUE(w.whitening_factor.allFinite());
}

TEST(Whitening, ChannelMismatch) {
  const SpatialWhitener w = whitener_from_covariance(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_ERROR_CODE(euclidean_align(random_tensor({2, 4, 8}, 1), w), ErrorCode::ShapeMismatch);
}
