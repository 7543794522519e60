#include "latalign/align/deep_set.hpp"

#include <cmath>

#include "latalign/error.hpp"

namespace latalign {

namespace {
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "identity") return Activation::Identity;
  if (text == "relu") return Activation::Relu;
  if (text == "elu") return Activation::Elu;
  if (text == "tanh") return Activation::Tanh;
  fail(ErrorCode::ConfigInvalid, "unknown activation '" + std::string(text) + "'");
}

double activate(Activation activation, double z) {
  switch (activation) {
    case Activation::Identity: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Elu: return z > 0.0 ? z : std::expm1(z);
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

double activate_derivative(Activation activation, double z) {
  switch (activation) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Elu: return z > 0.0 ? 1.0 : std::exp(z);
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

DeepSetBlock::DeepSetBlock(AlignmentLayer norm, Eigen::MatrixXd weights, Eigen::VectorXd bias,
                           Activation activation)
    : norm_(std::move(norm)),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      activation_(activation) {
  require(norm_.mode() == AlignmentMode::Latent, ErrorCode::ModeMismatch,
          "deep set blocks use a latent-mode alignment layer");
  require(static_cast<std::size_t>(weights_.rows()) == norm_.features(), ErrorCode::ShapeMismatch,
          "weight rows must equal the input feature count");
  require(bias_.size() == weights_.cols(), ErrorCode::ShapeMismatch,
          "bias length must equal the output feature count");
}

Tensor DeepSetBlock::readout(const Tensor& x) {
  Tensor aligned = latent_align(x, norm_);
  for (std::size_t i = 0; i < aligned.size(); ++i) aligned[i] += x[i];
  return aligned;
}

Tensor DeepSetBlock::forward(const Tensor& x) {
  require(x.rank() == 2, ErrorCode::ShapeMismatch, "deep set input must be [n x d]");
  require(x.dim(0) >= 2, ErrorCode::SingleTrialContext, "deep set context needs two trials");
  const Tensor aligned = latent_align(x, norm_);
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto d = static_cast<Eigen::Index>(x.dim(1));
  // x - rho(x) = -aligned
  aligned_ = Eigen::Map<const RowMatrix>(aligned.data(), n, d);
  pre_activation_ = (-aligned_ * weights_).rowwise() + bias_.transpose();
  Tensor out({x.dim(0), static_cast<std::size_t>(weights_.cols())});
  Eigen::Map<RowMatrix> o(out.data(), n, weights_.cols());
  o = pre_activation_.unaryExpr([this](double z) { return activate(activation_, z); });
  return out;
}

DeepSetBlock::Gradients DeepSetBlock::backward(const Tensor& grad_output) {
  const auto n = pre_activation_.rows();
  const auto dout = pre_activation_.cols();
  require(grad_output.rank() == 2 && static_cast<Eigen::Index>(grad_output.dim(0)) == n &&
              static_cast<Eigen::Index>(grad_output.dim(1)) == dout,
          ErrorCode::ShapeMismatch, "gradient shape does not match last forward");
  Eigen::Map<const RowMatrix> g(grad_output.data(), n, dout);
  const Eigen::MatrixXd gz =
      g.cwiseProduct(pre_activation_.unaryExpr(
          [this](double z) { return activate_derivative(activation_, z); }));

  Gradients grads;
  grads.bias = gz.colwise().sum().transpose();
  grads.weights = -aligned_.transpose() * gz;

  Tensor grad_aligned({static_cast<std::size_t>(n), norm_.features()});
  Eigen::Map<RowMatrix> ga(grad_aligned.data(), n, static_cast<Eigen::Index>(norm_.features()));
  ga = -gz * weights_.transpose();

  norm_.zero_grad();
  grads.input = norm_.backward(grad_aligned);
  grads.scale = norm_.scale_grad();
  grads.shift = norm_.shift_grad();
  return grads;
}

Tensor deep_set_forward(const Tensor& batch_features, DeepSetBlock& block) {
  return block.forward(batch_features);
}

}  // namespace latalign
