#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latalign/align/alignment_layer.hpp"
#include "latalign/random.hpp"
#include "latalign/tensor.hpp"

namespace latalign {

/// Per-call state shared by every layer of one forward pass.
struct ForwardContext {
  AlignmentPass alignment;
  Rng* rng = nullptr;                    // dropout masks; required when training
  std::vector<Tensor>* captures = nullptr;  // hook outputs, indexed by hook
};

/// View of one trainable tensor and its gradient buffer.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, ForwardContext& ctx) = 0;
  /// Gradient w.r.t. the input of the most recent forward; accumulates parameter gradients.
  virtual Tensor backward(const Tensor& grad) = 0;
  virtual void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out);
  virtual void collect_alignment(std::vector<AlignmentLayer*>& out);
  virtual void zero_grad() {}
  virtual std::string kind() const = 0;
};

using LayerPtr = std::unique_ptr<Layer>;

/// 2-D convolution over [n, in, h, w]. No padding along h; "same" padding
/// along w (time). Grouped when groups > 1 (depthwise when groups == in).
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t groups,
         bool bias, Rng& init);

  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) override;
  void zero_grad() override;
  std::string kind() const override { return "conv2d"; }

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel_h() const noexcept { return kh_; }
  std::size_t kernel_w() const noexcept { return kw_; }
  std::size_t groups() const noexcept { return groups_; }
  /// Layout [out][in / groups][kh][kw].
  std::vector<double>& weight() noexcept { return weight_; }
  const std::vector<double>& weight() const noexcept { return weight_; }
  std::vector<double>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_, kh_, kw_, groups_;
  bool has_bias_;
  std::vector<double> weight_, weight_grad_, bias_, bias_grad_;
  Tensor input_;
};

class Linear : public Layer {
 public:
  Linear(std::size_t in, std::size_t out, Rng& init);
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) override;
  void zero_grad() override;
  std::string kind() const override { return "linear"; }

 private:
  std::size_t in_, out_;
  std::vector<double> weight_, weight_grad_, bias_, bias_grad_;  // weight [out][in]
  Tensor input_;
};

enum class PoolKind { Average, Max };

/// Non-overlapping pooling along the last axis of [n, c, h, w]; the tail is dropped.
class Pool : public Layer {
 public:
  Pool(PoolKind kind, std::size_t size);
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  std::string kind() const override { return kind_ == PoolKind::Average ? "avgpool" : "maxpool"; }

 private:
  PoolKind kind_;
  std::size_t size_;
  Tensor::Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

enum class Nonlinearity { Elu, Relu };

class ActivationLayer : public Layer {
 public:
  explicit ActivationLayer(Nonlinearity f) : f_(f) {}
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  std::string kind() const override { return f_ == Nonlinearity::Elu ? "elu" : "relu"; }

 private:
  Nonlinearity f_;
  Tensor input_;
};

/// Inverted dropout; identity at inference.
class Dropout : public Layer {
 public:
  explicit Dropout(double p) : p_(p) {}
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  std::string kind() const override { return "dropout"; }

 private:
  double p_;
  std::vector<double> mask_;
};

/// Reshapes every trial; the trial axis is kept.
class Reshape : public Layer {
 public:
  explicit Reshape(Tensor::Shape trial_shape) : trial_shape_(std::move(trial_shape)) {}
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  std::string kind() const override { return "reshape"; }

 private:
  Tensor::Shape trial_shape_;
  Tensor::Shape input_shape_;
};

/// Normalization site. Optionally records a copy of its output as a hook capture.
class Norm : public Layer {
 public:
  Norm(std::size_t features, AlignmentMode mode, bool affine, std::optional<std::size_t> hook);
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_alignment(std::vector<AlignmentLayer*>& out) override;
  void zero_grad() override { layer_.zero_grad(); }
  std::string kind() const override { return "norm"; }

  AlignmentLayer& layer() noexcept { return layer_; }
  std::optional<std::size_t> hook() const noexcept { return hook_; }

 private:
  AlignmentLayer layer_;
  std::optional<std::size_t> hook_;
};

/// Records a copy of its input under the given hook index.
class Capture : public Layer {
 public:
  explicit Capture(std::size_t hook) : hook_(hook) {}
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override { return grad; }
  std::string kind() const override { return "capture"; }

 private:
  std::size_t hook_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_alignment(std::vector<AlignmentLayer*>& out) override;
  void zero_grad() override;
  std::string kind() const override { return "sequential"; }

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<LayerPtr> layers_;
};

/// Parallel branches on the same input, concatenated along axis 1.
class Concat : public Layer {
 public:
  Sequential& add_branch();
  Tensor forward(const Tensor& x, ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad) override;
  void collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_alignment(std::vector<AlignmentLayer*>& out) override;
  void zero_grad() override;
  std::string kind() const override { return "concat"; }

  std::size_t branch_count() const noexcept { return branches_.size(); }
  Sequential& branch(std::size_t i) { return *branches_.at(i); }

 private:
  std::vector<std::unique_ptr<Sequential>> branches_;
  std::vector<std::size_t> widths_;
  Tensor::Shape output_shape_;
};

}  // namespace latalign
