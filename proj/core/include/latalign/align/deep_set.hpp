#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "latalign/align/alignment_layer.hpp"
#include "latalign/tensor.hpp"

namespace latalign {

enum class Activation { Identity, Relu, Elu, Tanh };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

double activate(Activation activation, double z);
/// Derivative expressed through the pre-activation z.
double activate_derivative(Activation activation, double z);

/// Permutation-equivariant set layer written in deep-set form:
///
///     rho(x) = x + standardize(x) * scale + shift
///     f(x)   = act(bias + (x - rho(x)) * weights)
///
/// The set readout rho is computed over the whole input set (one subject
/// context). Since x - rho(x) is the negated aligned feature, f equals the
/// aligned features fed through a linear layer with negated weights.
class DeepSetBlock {
 public:
  DeepSetBlock(AlignmentLayer norm, Eigen::MatrixXd weights, Eigen::VectorXd bias,
               Activation activation);

  /// [n x d] -> [n x d'].
  Tensor forward(const Tensor& x);
  /// rho(x), [n x d].
  Tensor readout(const Tensor& x);

  struct Gradients {
    Tensor input;
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    std::vector<double> scale;
    std::vector<double> shift;
  };
  Gradients backward(const Tensor& grad_output);

  AlignmentLayer& norm() noexcept { return norm_; }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  Eigen::MatrixXd& weights() noexcept { return weights_; }
  const Eigen::VectorXd& bias() const noexcept { return bias_; }
  Eigen::VectorXd& bias() noexcept { return bias_; }
  Activation activation() const noexcept { return activation_; }

 private:
  AlignmentLayer norm_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  Activation activation_;
  Eigen::MatrixXd aligned_;
  Eigen::MatrixXd pre_activation_;
};

Tensor deep_set_forward(const Tensor& batch_features, DeepSetBlock& block);

}  // namespace latalign
