#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace latalign {

struct Fold {
  std::vector<std::string> train_subjects;
  std::vector<std::string> val_subjects;
};

/// Subject-independent folds: the shuffled subjects are cut into fold_count
/// contiguous blocks whose sizes differ by at most one.
std::vector<Fold> make_folds(std::vector<std::string> subject_ids, std::size_t fold_count,
                             std::uint64_t seed);

}  // namespace latalign
