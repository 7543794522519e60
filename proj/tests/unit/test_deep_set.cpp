#include "latalign/align/deep_set.hpp"

#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

DeepSetBlock random_block(std::size_t d, std::size_t dout, Activation act, std::uint64_t seed) {
  Rng rng(seed);
  AlignmentLayer norm(d, AlignmentMode::Latent);
  for (double& a : norm.scale()) a = rng.uniform(0.5, 1.5);
  for (double& b : norm.shift()) b = rng.normal(0.0, 0.3);
  Eigen::MatrixXd w(d, dout);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  Eigen::VectorXd bias(dout);
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias[i] = rng.normal(0.0, 0.2);
  return DeepSetBlock(std::move(norm), std::move(w), std::move(bias), act);
}

}  // namespace

TEST(DeepSet, IdentityBlockGivesNegatedStandardization) {
  const std::size_t d = 3;
  DeepSetBlock block(AlignmentLayer(d, AlignmentMode::Latent), Eigen::MatrixXd::Identity(d, d),
                     Eigen::VectorXd::Zero(d), Activation::Identity);
  const Tensor x = random_tensor({6, d}, 3, 2.0, 1.0);
  AlignmentLayer ref(d, AlignmentMode::Latent);
  const Tensor standardized = latent_align(x, ref);
  const Tensor y = deep_set_forward(x, block);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], -standardized[i], 1e-12);
}

TEST(DeepSet, ReadoutIsInputPlusAligned) {
  DeepSetBlock block = random_block(4, 2, Activation::Elu, 5);
  const Tensor x = random_tensor({5, 4}, 6);
  const Tensor rho = block.readout(x);
  AlignmentLayer ref = block.norm();
  const Tensor aligned = latent_align(x, ref);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(rho[i] - x[i], aligned[i], 1e-12);
}

TEST(DeepSet, EquivariantUnderPermutation) {
  for (Activation act : {Activation::Identity, Activation::Relu, Activation::Elu, Activation::Tanh}) {
    DeepSetBlock block = random_block(4, 3, act, 7);
    const Tensor x = random_tensor({8, 4}, 8, 3.0);
    const std::vector<std::size_t> perm{7, 2, 5, 0, 1, 6, 3, 4};
    const Tensor y = deep_set_forward(x, block);
    const Tensor yp = deep_set_forward(permute_trials(x, perm), block);
    EXPECT_LT(max_abs_difference(permute_trials(y, perm), yp), 1e-6) << to_string(act);
  }
}

TEST(DeepSet, EqualsLatentAlignThenLinearWithNegatedWeights) {
  DeepSetBlock block = random_block(5, 3, Activation::Tanh, 11);
  const Tensor x = random_tensor({7, 5}, 12);
  const Tensor y = deep_set_forward(x, block);
  AlignmentLayer ref = block.norm();
  const Tensor a = latent_align(x, ref);
  for (std::size_t i = 0; i < 7; ++i)
    for (Eigen::Index k = 0; k < 3; ++k) {
      double z = block.bias()[k];
      for (Eigen::Index j = 0; j < 5; ++j) z += a[i * 5 + static_cast<std::size_t>(j)] * -block.weights()(j, k);
      EXPECT_NEAR(y[i * 3 + static_cast<std::size_t>(k)], std::tanh(z), 1e-12);
    }
}

TEST(DeepSet, GradientMatchesFiniteDifference) {
  DeepSetBlock block = random_block(3, 2, Activation::Tanh, 13);
  const Tensor x = random_tensor({5, 3}, 14);
  const Tensor w = random_tensor({5, 2}, 15);
  deep_set_forward(x, block);
  const DeepSetBlock::Gradients g = block.backward(w);
  auto loss = [&](DeepSetBlock b, const Tensor& xi) {
    const Tensor y = deep_set_forward(xi, b);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
  };
  const std::vector<double> numeric = numeric_gradient([&](const Tensor& xi) { return loss(block, xi); }, x);
  EXPECT_LT(relative_error(g.input.values(), numeric), 1e-4);

  const double h = 1e-6;
  for (Eigen::Index j = 0; j < block.weights().size(); ++j) {
    DeepSetBlock up = block, down = block;
    up.weights().data()[j] += h;
    down.weights().data()[j] -= h;
    const double fd = (loss(up, x) - loss(down, x)) / (2 * h);
    EXPECT_NEAR(g.weights.data()[j], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (Eigen::Index k = 0; k < block.bias().size(); ++k) {
    DeepSetBlock up = block, down = block;
    up.bias()[k] += h;
    down.bias()[k] -= h;
    const double fd = (loss(up, x) - loss(down, x)) / (2 * h);
    EXPECT_NEAR(g.bias[k], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
  for (std::size_t j = 0; j < 3; ++j) {
    DeepSetBlock up = block, down = block;
    up.norm().scale()[j] += h;
    down.norm().scale()[j] -= h;
    const double fd = (loss(up, x) - loss(down, x)) / (2 * h);
    EXPECT_NEAR(g.scale[j], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(DeepSet, RejectsSingleTrial) {
  DeepSetBlock block = random_block(2, 2, Activation::Relu, 1);
  EXPECT_ERROR_CODE(deep_set_forward(random_tensor({1, 2}, 2), block), ErrorCode::SingleTrialContext);
}

TEST(DeepSet, RejectsNonLatentNorm) {
  EXPECT_ERROR_CODE(DeepSetBlock(AlignmentLayer(2, AlignmentMode::PlainBn), Eigen::MatrixXd::Identity(2, 2),
                                 Eigen::VectorXd::Zero(2), Activation::Identity),
                    ErrorCode::ModeMismatch);
}
