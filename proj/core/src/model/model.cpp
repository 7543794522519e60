#include "latalign/model/model.hpp"

#include <cmath>

#include "latalign/error.hpp"

namespace latalign {

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::EegNet: return "eegnet";
    case Architecture::DeepSleep: return "deepsleep";
    case Architecture::EegInception: return "eeginception";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view text) {
  if (text == "eegnet") return Architecture::EegNet;
  if (text == "deepsleep") return Architecture::DeepSleep;
  if (text == "eeginception") return Architecture::EegInception;
  fail(ErrorCode::ConfigInvalid, "unknown architecture '" + std::string(text) + "'");
}

std::size_t odd_kernel(double seconds, double rate_hz) {
  auto k = static_cast<std::size_t>(std::llround(seconds * rate_hz));
  if (k % 2 == 0) ++k;
  return std::max<std::size_t>(k, 1);
}

namespace {

std::size_t pool_size(double seconds, double rate_hz) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(seconds * rate_hz)));
}

}  // namespace

ModelSpec ModelSpec::defaults(Architecture arch, std::size_t channels, std::size_t times,
                              std::size_t classes, double rate_hz) {
  ModelSpec s;
  s.architecture = arch;
  s.n_channels = channels;
  s.n_times = times;
  s.n_classes = classes;
  s.rate_hz = rate_hz;
  switch (arch) {
    case Architecture::EegNet:
      s.n_temporal_filters = 8;
      s.n_spatial_filters = 2;
      break;
    case Architecture::DeepSleep:
      s.n_temporal_filters = 8;
      s.n_spatial_filters = channels;
      break;
    case Architecture::EegInception:
      s.n_temporal_filters = 8;
      s.n_spatial_filters = 2;
      break;
  }
  return s;
}

void ModelSpec::validate() const {
  require(n_channels >= 1 && n_times >= 1, ErrorCode::IncompatibleShape, "model input must be non-empty");
  require(n_classes >= 2, ErrorCode::IncompatibleShape, "model needs at least two classes");
  require(n_temporal_filters >= 1, ErrorCode::IncompatibleShape, "temporal filter count must be positive");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::ConfigInvalid, "dropout must lie in [0, 1)");
  require(rate_hz > 0.0, ErrorCode::ConfigInvalid, "model rate_hz must be positive");
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = {{"architecture", std::string(to_string(s.architecture))},
       {"n_channels", s.n_channels},
       {"n_times", s.n_times},
       {"n_classes", s.n_classes},
       {"n_temporal_filters", s.n_temporal_filters},
       {"n_spatial_filters", s.n_spatial_filters},
       {"dropout", s.dropout},
       {"alignment_mode", std::string(to_string(s.alignment_mode))},
       {"rate_hz", s.rate_hz}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.architecture = parse_architecture(j.at("architecture").get<std::string>());
  s.n_channels = j.at("n_channels").get<std::size_t>();
  s.n_times = j.at("n_times").get<std::size_t>();
  s.n_classes = j.at("n_classes").get<std::size_t>();
  const ModelSpec d = ModelSpec::defaults(s.architecture, s.n_channels, s.n_times, s.n_classes, 1.0);
  s.n_temporal_filters = j.value("n_temporal_filters", d.n_temporal_filters);
  s.n_spatial_filters = j.value("n_spatial_filters", d.n_spatial_filters);
  s.dropout = j.value("dropout", d.dropout);
  s.alignment_mode = parse_alignment_mode(j.value("alignment_mode", std::string("plain_bn")));
  s.rate_hz = j.at("rate_hz").get<double>();
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), rng_(derive_seed(seed, 0xD809)) {
  spec_.validate();
  if (spec_.architecture == Architecture::DeepSleep && spec_.n_spatial_filters == 0)
    spec_.n_spatial_filters = spec_.n_channels;
  require(spec_.n_spatial_filters >= 1, ErrorCode::IncompatibleShape, "spatial filter count must be positive");
  Rng init(seed);
  switch (spec_.architecture) {
    case Architecture::EegNet: build_eegnet(init); break;
    case Architecture::DeepSleep: build_deepsleep(init); break;
    case Architecture::EegInception: build_eeginception(init); break;
  }
}

// Temporal conv -> depthwise spatial conv -> separable conv, per the original EEGNet.
void Model::build_eegnet(Rng& init) {
  const std::size_t C = spec_.n_channels, T = spec_.n_times;
  const std::size_t F1 = spec_.n_temporal_filters, D = spec_.n_spatial_filters, F2 = F1 * D;
  const AlignmentMode mode = spec_.alignment_mode;
  const std::size_t k1 = odd_kernel(0.5, spec_.rate_hz);
  const std::size_t k2 = odd_kernel(0.125, spec_.rate_hz);
  const std::size_t t_out = T / 4 / 8;
  require(t_out >= 1, ErrorCode::IncompatibleShape,
          "eegnet needs at least 32 samples per trial, got " + std::to_string(T));

  net_.add<Norm>(C, mode, false, 0);
  net_.add<Reshape>(Tensor::Shape{1, C, T});
  net_.add<Conv2d>(1, F1, 1, k1, 1, false, init);
  net_.add<Norm>(F1, mode, true, 1);
  spatial_.push_back(&net_.add<Conv2d>(F1, F2, C, 1, F1, false, init));
  net_.add<Norm>(F2, mode, true, 2);
  net_.add<ActivationLayer>(Nonlinearity::Elu);
  net_.add<Pool>(PoolKind::Average, 4);
  net_.add<Dropout>(spec_.dropout);
  net_.add<Conv2d>(F2, F2, 1, k2, F2, false, init);
  net_.add<Conv2d>(F2, F2, 1, 1, 1, false, init);
  net_.add<Norm>(F2, mode, true, 3);
  net_.add<ActivationLayer>(Nonlinearity::Elu);
  net_.add<Pool>(PoolKind::Average, 8);
  net_.add<Dropout>(spec_.dropout);
  net_.add<Reshape>(Tensor::Shape{F2 * t_out});
  net_.add<Linear>(F2 * t_out, spec_.n_classes, init);
  hook_features_ = {C, F1, F2, F2};
}

// Spatial projection to virtual channels, temporal filters per virtual
// channel collapsed into one feature axis, then a second temporal stage.
void Model::build_deepsleep(Rng& init) {
  const std::size_t C = spec_.n_channels, T = spec_.n_times;
  const std::size_t S = spec_.n_spatial_filters, F = spec_.n_temporal_filters, L = S * F;
  const AlignmentMode mode = spec_.alignment_mode;
  const std::size_t k = odd_kernel(0.5, spec_.rate_hz);
  const std::size_t pool = pool_size(0.125, spec_.rate_hz);
  const std::size_t t_out = T / pool / pool;
  require(t_out >= 1, ErrorCode::IncompatibleShape,
          "deepsleep needs at least " + std::to_string(pool * pool) + " samples per trial");

  net_.add<Norm>(C, mode, false, 0);
  net_.add<Reshape>(Tensor::Shape{1, C, T});
  spatial_.push_back(&net_.add<Conv2d>(1, S, C, 1, 1, false, init));
  net_.add<Norm>(S, mode, true, 1);
  net_.add<Reshape>(Tensor::Shape{1, S, T});
  net_.add<Conv2d>(1, F, 1, k, 1, false, init);
  net_.add<Reshape>(Tensor::Shape{L, 1, T});
  net_.add<Norm>(L, mode, true, 2);
  net_.add<ActivationLayer>(Nonlinearity::Relu);
  net_.add<Pool>(PoolKind::Max, pool);
  net_.add<Conv2d>(L, L, 1, k, 1, false, init);
  net_.add<Norm>(L, mode, true, 3);
  net_.add<ActivationLayer>(Nonlinearity::Relu);
  net_.add<Pool>(PoolKind::Max, pool);
  net_.add<Dropout>(spec_.dropout);
  net_.add<Reshape>(Tensor::Shape{L * t_out});
  net_.add<Linear>(L * t_out, spec_.n_classes, init);
  hook_features_ = {C, S, L, L};
}

// Two inception blocks with three temporal scales (500/250/125 ms) and a
// two-stage output block, per the original EEG-Inception.
void Model::build_eeginception(Rng& init) {
  const std::size_t C = spec_.n_channels, T = spec_.n_times;
  const std::size_t F = spec_.n_temporal_filters, D = spec_.n_spatial_filters;
  const AlignmentMode mode = spec_.alignment_mode;
  const double p = spec_.dropout;
  const std::vector<double> scales = {0.5, 0.25, 0.125};
  const std::size_t t_out = T / 4 / 2 / 2 / 2;
  require(t_out >= 1, ErrorCode::IncompatibleShape,
          "eeginception needs at least 32 samples per trial, got " + std::to_string(T));

  net_.add<Norm>(C, mode, false, 0);
  net_.add<Reshape>(Tensor::Shape{1, C, T});

  auto& block1 = net_.add<Concat>();
  for (double s : scales) {
    auto& b = block1.add_branch();
    b.add<Conv2d>(1, F, 1, odd_kernel(s, spec_.rate_hz), 1, false, init);
    b.add<Norm>(F, mode, true, std::nullopt);
    b.add<ActivationLayer>(Nonlinearity::Elu);
    b.add<Dropout>(p);
    spatial_.push_back(&b.add<Conv2d>(F, F * D, C, 1, F, false, init));
    b.add<Norm>(F * D, mode, true, std::nullopt);
    b.add<ActivationLayer>(Nonlinearity::Elu);
    b.add<Dropout>(p);
  }
  const std::size_t w1 = scales.size() * F * D;
  net_.add<Capture>(1);
  net_.add<Pool>(PoolKind::Average, 4);

  auto& block2 = net_.add<Concat>();
  for (double s : scales) {
    auto& b = block2.add_branch();
    b.add<Conv2d>(w1, F, 1, odd_kernel(s / 4.0, spec_.rate_hz), 1, false, init);
    b.add<Norm>(F, mode, true, std::nullopt);
    b.add<ActivationLayer>(Nonlinearity::Elu);
    b.add<Dropout>(p);
  }
  const std::size_t w2 = scales.size() * F;
  net_.add<Capture>(2);
  net_.add<Pool>(PoolKind::Average, 2);

  const std::size_t w3a = w2 / 2, w3b = w2 / 4;
  net_.add<Conv2d>(w2, w3a, 1, odd_kernel(0.0625, spec_.rate_hz), 1, false, init);
  net_.add<Norm>(w3a, mode, true, std::nullopt);
  net_.add<ActivationLayer>(Nonlinearity::Elu);
  net_.add<Pool>(PoolKind::Average, 2);
  net_.add<Dropout>(p);
  net_.add<Conv2d>(w3a, w3b, 1, odd_kernel(0.03125, spec_.rate_hz), 1, false, init);
  net_.add<Norm>(w3b, mode, true, 3);
  net_.add<ActivationLayer>(Nonlinearity::Elu);
  net_.add<Pool>(PoolKind::Average, 2);
  net_.add<Dropout>(p);
  net_.add<Reshape>(Tensor::Shape{w3b * t_out});
  net_.add<Linear>(w3b * t_out, spec_.n_classes, init);
  hook_features_ = {C, w1, w2, w3b};
}

ForwardResult Model::forward(const Tensor& x, const ForwardOptions& options) {
  require(x.rank() == 3 && x.dim(1) == spec_.n_channels && x.dim(2) == spec_.n_times,
          ErrorCode::IncompatibleShape,
          "model expects [n, " + std::to_string(spec_.n_channels) + ", " +
              std::to_string(spec_.n_times) + "], got " + x.shape_string());
  require(x.all_finite(), ErrorCode::NonFiniteInput, "model input contains NaN or Inf");
  ForwardResult result;
  ForwardContext ctx;
  ctx.alignment.training = options.training;
  ctx.alignment.groups = options.groups;
  ctx.alignment.collect_context = options.collect_context;
  ctx.rng = &rng_;
  if (options.capture) ctx.captures = &result.captures;
  result.scores = net_.forward(x, ctx);
  return result;
}

Tensor Model::backward(const Tensor& grad_scores) { return net_.backward(grad_scores); }

void Model::zero_grad() { net_.zero_grad(); }

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  net_.collect_parameters("", out);
  return out;
}

std::vector<AlignmentLayer*> Model::alignment_layers() {
  std::vector<AlignmentLayer*> out;
  net_.collect_alignment(out);
  return out;
}

void Model::set_alignment_mode(AlignmentMode mode) {
  spec_.alignment_mode = mode;
  for (auto* layer : alignment_layers()) layer->set_mode(mode);
}

Eigen::MatrixXd Model::spatial_weights() const {
  std::size_t rows = 0;
  for (const auto* conv : spatial_) rows += conv->out_channels();
  const std::size_t C = spec_.n_channels;
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(C));
  Eigen::Index r = 0;
  for (const auto* conv : spatial_) {
    // Kernel [out][in/groups = 1][C][1].
    for (std::size_t o = 0; o < conv->out_channels(); ++o, ++r)
      for (std::size_t c = 0; c < C; ++c) w(r, static_cast<Eigen::Index>(c)) = conv->weight()[o * C + c];
  }
  return w;
}

void Model::copy_state_from(Model& other) {
  auto dst = parameters();
  auto src = other.parameters();
  require(dst.size() == src.size(), ErrorCode::IncompatibleShape, "models differ in structure");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    require(dst[i].value.size() == src[i].value.size(), ErrorCode::IncompatibleShape,
            "parameter " + dst[i].name + " differs in size");
    std::copy(src[i].value.begin(), src[i].value.end(), dst[i].value.begin());
  }
  auto la = alignment_layers();
  auto lb = other.alignment_layers();
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (lb[i]->running_stats()) la[i]->set_running_stats(*lb[i]->running_stats());
    if (lb[i]->context_stats()) la[i]->set_context_stats(*lb[i]->context_stats());
    else la[i]->clear_context_stats();
  }
}

std::unique_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t seed) {
  return std::make_unique<Model>(spec, seed);
}

void adapt_batchnorm(Model& model, const Tensor& context) {
  for (auto* layer : model.alignment_layers())
    require(layer->mode() == AlignmentMode::Latent || layer->running_stats().has_value(),
            ErrorCode::NotTrained, "adaptation needs trained running statistics");
  require(context.rank() >= 1 && context.dim(0) >= 2, ErrorCode::SingleTrialContext,
          "adaptation context needs at least two trials");
  ForwardOptions options;
  options.collect_context = true;
  model.forward(context, options);
}

void restore_batchnorm(Model& model) {
  for (auto* layer : model.alignment_layers()) layer->clear_context_stats();
}

}  // namespace latalign
