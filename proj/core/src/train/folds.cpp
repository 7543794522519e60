#include "latalign/train/folds.hpp"

#include <algorithm>
#include <set>

#include "latalign/error.hpp"
#include "latalign/random.hpp"

namespace latalign {

std::vector<Fold> make_folds(std::vector<std::string> subject_ids, std::size_t fold_count,
                             std::uint64_t seed) {
  std::sort(subject_ids.begin(), subject_ids.end());
  subject_ids.erase(std::unique(subject_ids.begin(), subject_ids.end()), subject_ids.end());
  require(fold_count >= 1, ErrorCode::ConfigInvalid, "fold count must be positive");
  require(fold_count <= subject_ids.size(), ErrorCode::TooFewSubjects,
          std::to_string(fold_count) + " folds need at least as many subjects, got " +
              std::to_string(subject_ids.size()));
  Rng rng(derive_seed(seed, 0xF01D));
  rng.shuffle(subject_ids);

  const std::size_t n = subject_ids.size();
  const std::size_t base = n / fold_count, extra = n % fold_count;
  std::vector<Fold> folds(fold_count);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < fold_count; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].val_subjects.assign(subject_ids.begin() + static_cast<std::ptrdiff_t>(pos),
                                 subject_ids.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].val_subjects.begin(), folds[f].val_subjects.end());
    pos += size;
  }
  for (auto& fold : folds) {
    const std::set<std::string> val(fold.val_subjects.begin(), fold.val_subjects.end());
    for (const auto& s : subject_ids)
      if (!val.count(s)) fold.train_subjects.push_back(s);
    std::sort(fold.train_subjects.begin(), fold.train_subjects.end());
  }
  return folds;
}

}  // namespace latalign
