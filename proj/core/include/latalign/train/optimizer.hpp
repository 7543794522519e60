#pragma once

#include <vector>

#include "latalign/model/layers.hpp"

namespace latalign {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2 penalty: weight_decay * w is added to the gradient.
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::vector<ParamRef> params, AdamOptions options);

  /// One update from the accumulated gradients (which are left untouched).
  void step();
  std::size_t steps() const noexcept { return t_; }

 private:
  std::vector<ParamRef> params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace latalign
