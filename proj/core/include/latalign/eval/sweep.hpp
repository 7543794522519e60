#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latalign/eval/composition.hpp"
#include "latalign/io/trial_archive.hpp"
#include "latalign/model/model.hpp"
#include "latalign/train/trainer.hpp"

namespace latalign {

struct SweepOptions {
  std::size_t n = 21;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  Method method = Method::Latent;
  /// Trials per class in each subject's fixed evaluation set (0: the largest
  /// balanced subset).
  std::size_t eval_per_class = 0;
  std::vector<double> class_probs;  // empty: uniform
};

/// For every composition, draws `repetitions` context sets with exactly those
/// class counts from each session, uses the context as the alignment set and
/// scores the session's fixed, class-balanced evaluation set. Entries average
/// balanced accuracy over repetitions and sessions.
CompositionGrid imbalance_sweep(Model& model, const TrialArchive& archive,
                                std::span<const std::size_t> sessions, const SweepOptions& options);

}  // namespace latalign
