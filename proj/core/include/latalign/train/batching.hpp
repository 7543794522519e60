#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "latalign/align/alignment_layer.hpp"
#include "latalign/io/trial_archive.hpp"
#include "latalign/random.hpp"

namespace latalign {

enum class ClassBalance { Balanced, RandomUnbalanced, FixedRatio };

std::string_view to_string(ClassBalance balance);
ClassBalance parse_class_balance(std::string_view text);

struct BatchPlan {
  std::size_t subjects_per_batch = 4;
  std::size_t trials_per_subject = 12;
  ClassBalance class_balance = ClassBalance::Balanced;
  /// FixedRatio: relative class weights, e.g. {5, 1} for 10 + 2 of 12.
  std::vector<double> ratio;
  std::uint64_t seed = 0;

  std::size_t batch_size() const noexcept { return subjects_per_batch * trials_per_subject; }
  void validate(std::size_t n_classes) const;
};

void to_json(nlohmann::json& j, const BatchPlan& plan);
void from_json(const nlohmann::json& j, BatchPlan& plan);

/// Per-class trial counts for one subject group of a batch.
std::vector<std::size_t> draw_composition(const BatchPlan& plan, std::size_t n_classes, Rng& rng);

/// Exact split of n trials by the ratio; fails unless the ratio divides n exactly.
std::vector<std::size_t> fixed_ratio_counts(std::span<const double> ratio, std::size_t n);

struct ComposedBatch {
  TrialBatch batch;
  /// Trial indices per subject session, in batch order.
  SubjectGroups groups;
  std::vector<TrialRef> refs;
};

/// Builds subject-grouped batches from a fixed set of archive sessions.
/// Sessions are visited in shuffled rounds; each class of each session is a
/// shuffled pool drawn without replacement and refilled when exhausted.
class BatchComposer {
 public:
  BatchComposer(const TrialArchive& archive, std::vector<std::size_t> sessions, BatchPlan plan);

  /// Number of batches in one epoch: floor(training trials / batch size).
  std::size_t batches_per_epoch() const noexcept;
  /// Deterministic in (archive, sessions, plan, epoch_seed).
  std::vector<ComposedBatch> epoch(std::uint64_t epoch_seed) const;

  const BatchPlan& plan() const noexcept { return plan_; }

 private:
  const TrialArchive& archive_;
  std::vector<std::size_t> sessions_;
  BatchPlan plan_;
  std::size_t total_trials_ = 0;
  // per session, per class: trial indices
  std::vector<std::vector<std::vector<std::size_t>>> by_class_;
};

}  // namespace latalign
