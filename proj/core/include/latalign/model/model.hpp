#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "latalign/model/layers.hpp"

namespace latalign {

enum class Architecture { EegNet, DeepSleep, EegInception };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);

struct ModelSpec {
  Architecture architecture = Architecture::EegNet;
  std::size_t n_channels = 0;
  std::size_t n_times = 0;
  std::size_t n_classes = 0;
  /// EEGNet: F1. DeepSleep: temporal filters per virtual channel. EEGInception: filters per branch.
  std::size_t n_temporal_filters = 8;
  /// EEGNet and EEGInception: depth multiplier. DeepSleep: virtual channels (0 = n_channels).
  std::size_t n_spatial_filters = 2;
  double dropout = 0.25;
  AlignmentMode alignment_mode = AlignmentMode::PlainBn;
  double rate_hz = 0.0;

  /// Architecture defaults for the given input geometry.
  static ModelSpec defaults(Architecture arch, std::size_t channels, std::size_t times,
                            std::size_t classes, double rate_hz);
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

/// Odd kernel length closest to `seconds * rate_hz` (rounded half up, then made odd).
std::size_t odd_kernel(double seconds, double rate_hz);

struct ForwardOptions {
  bool training = false;
  const SubjectGroups* groups = nullptr;
  bool collect_context = false;
  bool capture = false;
};

struct ForwardResult {
  Tensor scores;                 // [n x n_classes]
  std::vector<Tensor> captures;  // one per hook when requested
};

/// Host network: an input-level per-electrode normalization (no affine),
/// the architecture's feature extractor with AlignmentLayer normalization
/// sites, and a linear classifier.
class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const noexcept { return spec_; }

  /// Input [n x channels x times].
  ForwardResult forward(const Tensor& x, const ForwardOptions& options);
  /// Gradient of the scores from the last training forward; accumulates parameter gradients.
  Tensor backward(const Tensor& grad_scores);
  void zero_grad();

  std::vector<ParamRef> parameters();
  std::vector<AlignmentLayer*> alignment_layers();
  void set_alignment_mode(AlignmentMode mode);
  /// Reseeds the dropout stream.
  void seed_dropout(std::uint64_t seed) { rng_ = Rng(seed); }

  std::size_t hook_count() const noexcept { return hook_features_.size(); }
  /// Feature count on axis 1 at each hook.
  const std::vector<std::size_t>& hook_features() const noexcept { return hook_features_; }

  /// Raw weights of the spatial projection stage, [spatial units x channels].
  Eigen::MatrixXd spatial_weights() const;

  /// Copies every parameter and the running statistics from another model with the same spec.
  void copy_state_from(Model& other);

 private:
  void build_eegnet(Rng& init);
  void build_deepsleep(Rng& init);
  void build_eeginception(Rng& init);

  ModelSpec spec_;
  Rng rng_;
  Sequential net_;
  std::vector<const Conv2d*> spatial_;
  std::vector<std::size_t> hook_features_;
};

std::unique_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t seed = 0);

/// One forward pass over the target context that stores each layer's
/// context statistics; later layers see already adapted activations.
/// Requires finalized running statistics on every batch-norm site.
void adapt_batchnorm(Model& model, const Tensor& context);
/// Drops context statistics so inference falls back to the running statistics.
void restore_batchnorm(Model& model);

}  // namespace latalign
