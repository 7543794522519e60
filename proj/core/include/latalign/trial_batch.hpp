#pragma once

#include <string>
#include <vector>

#include "latalign/tensor.hpp"

namespace latalign {

/// Epoched trials: signals [n x channels x times] with one label and identity per trial.
struct TrialBatch {
  Tensor signals;
  std::vector<int> labels;
  std::vector<std::string> subjects;
  std::vector<std::string> sessions;

  std::size_t size() const noexcept { return signals.empty() ? 0 : signals.dim(0); }
};

}  // namespace latalign
