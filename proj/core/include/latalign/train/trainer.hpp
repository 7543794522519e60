#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "latalign/io/trial_archive.hpp"
#include "latalign/model/model.hpp"
#include "latalign/train/batching.hpp"
#include "latalign/train/folds.hpp"

namespace latalign {

/// Alignment method compared by the harness.
///   baseline:  plain batch normalization, running statistics at inference
///   euclidean: baseline network on inputs whitened per subject context
///   adaptive:  baseline training, statistics replaced by the target context
///   latent:    subject-wise statistics at every normalization site
enum class Method { Baseline, Euclidean, Adaptive, Latent };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
AlignmentMode alignment_mode_for(Method method);

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  std::size_t epochs = 100;
  bool class_weights = true;
  std::uint64_t seed = 0;
  std::size_t fold_count = 10;
  /// Validate every k epochs (0: only after the last epoch).
  std::size_t eval_every = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

/// Inverse-frequency weights N / (K * n_c) over the trials of the given sessions.
std::vector<double> inverse_frequency_weights(const TrialArchive& archive,
                                              std::span<const std::size_t> sessions);

/// Weighted mean cross-entropy, sum_i w_yi * CE_i / sum_i w_yi. Writes dLoss/dScores
/// into `grad` when given. Empty weights mean uniform.
double weighted_cross_entropy(const Tensor& scores, std::span<const int> labels,
                              std::span<const double> weights, Tensor* grad);

/// Scores for trials of a single subject context.
Tensor infer(Model& model, const Tensor& subject_trials, Method method);
/// Score of one new trial given stored context trials of the same subject;
/// the new trial joins the context before statistics are computed.
Tensor infer_streaming(Model& model, const Tensor& context, const Tensor& new_trial, Method method);

/// Scores all trials of the alignment context `context` but returns only the rows of `targets`
/// when both are given separately; used by the imbalance sweep.
Tensor infer_with_context(Model& model, const Tensor& context, const Tensor& targets, Method method);

struct Predictions {
  std::vector<int> labels;
  std::vector<int> predicted;
  std::vector<std::size_t> sessions;  // archive session per trial
};

int argmax_row(const Tensor& scores, std::size_t row);
/// Runs inference with one context per archive session.
Predictions predict_sessions(Model& model, const TrialArchive& archive,
                             std::span<const std::size_t> sessions, Method method);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t batches = 0;
  double train_loss = 0.0;
  std::optional<double> val_balanced_accuracy;
};

struct FoldOutcome {
  std::size_t fold = 0;
  Fold subjects;
  std::unique_ptr<Model> model;
  std::vector<EpochRecord> curve;
  double val_balanced_accuracy = 0.0;
};

using ProgressFn = std::function<void(const EpochRecord&)>;

FoldOutcome train_fold(const TrialArchive& archive, const Fold& fold, std::size_t fold_index,
                       const ModelSpec& spec, Method method, const BatchPlan& plan,
                       const TrainConfig& config, const ProgressFn& progress = {});

}  // namespace latalign
