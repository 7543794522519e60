#include "latalign/model/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latalign/error.hpp"

namespace latalign {

namespace {

void init_uniform(std::vector<double>& v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

std::span<double> as_span(std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

void Layer::collect_parameters(const std::string&, std::vector<ParamRef>&) {}
void Layer::collect_alignment(std::vector<AlignmentLayer*>&) {}

// --- Conv2d -------------------------------------------------------------------

Conv2d::Conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t groups,
               bool bias, Rng& init)
    : in_(in), out_(out), kh_(kh), kw_(kw), groups_(groups), has_bias_(bias) {
  require(in > 0 && out > 0 && kh > 0 && kw > 0 && groups > 0 && in % groups == 0 &&
              out % groups == 0,
          ErrorCode::IncompatibleShape, "invalid convolution geometry");
  const std::size_t fan_in = (in / groups) * kh * kw;
  weight_.resize(out * fan_in);
  weight_grad_.assign(weight_.size(), 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  init_uniform(weight_, bound, init);
  if (has_bias_) {
    bias_.resize(out);
    init_uniform(bias_, bound, init);
    bias_grad_.assign(out, 0.0);
  }
}

Tensor Conv2d::forward(const Tensor& x, ForwardContext&) {
  require(x.rank() == 4 && x.dim(1) == in_ && x.dim(2) >= kh_, ErrorCode::IncompatibleShape,
          "conv2d expects [n, " + std::to_string(in_) + ", >=" + std::to_string(kh_) +
              ", w], got " + x.shape_string());
  input_ = x;
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h - kh_ + 1;
  const std::size_t in_pg = in_ / groups_, out_pg = out_ / groups_;
  const auto pad = static_cast<std::ptrdiff_t>((kw_ - 1) / 2);
  const auto W = static_cast<std::ptrdiff_t>(w);
  Tensor y({n, out_, ho, w});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      double* yo = y.data() + ((b * out_ + o) * ho) * w;
      if (has_bias_) std::fill(yo, yo + ho * w, bias_[o]);
      const std::size_t g = o / out_pg;
      for (std::size_t icl = 0; icl < in_pg; ++icl) {
        const std::size_t ic = g * in_pg + icl;
        const double* xi = x.data() + ((b * in_ + ic) * h) * w;
        const double* wk = weight_.data() + ((o * in_pg + icl) * kh_) * kw_;
        for (std::size_t a = 0; a < kh_; ++a) {
          for (std::size_t k = 0; k < kw_; ++k) {
            const double wv = wk[a * kw_ + k];
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(W, W - shift);
            for (std::size_t r = 0; r < ho; ++r) {
              double* yr = yo + r * w;
              const double* xr = xi + (r + a) * w + shift;
              for (std::ptrdiff_t t = lo; t < hi; ++t) yr[t] += wv * xr[t];
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad) {
  const Tensor& x = input_;
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h - kh_ + 1;
  const std::size_t in_pg = in_ / groups_, out_pg = out_ / groups_;
  const auto pad = static_cast<std::ptrdiff_t>((kw_ - 1) / 2);
  const auto W = static_cast<std::ptrdiff_t>(w);
  Tensor gx(x.shape());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      const double* go = grad.data() + ((b * out_ + o) * ho) * w;
      if (has_bias_) {
        double s = 0.0;
        for (std::size_t i = 0; i < ho * w; ++i) s += go[i];
        bias_grad_[o] += s;
      }
      const std::size_t g = o / out_pg;
      for (std::size_t icl = 0; icl < in_pg; ++icl) {
        const std::size_t ic = g * in_pg + icl;
        const double* xi = x.data() + ((b * in_ + ic) * h) * w;
        double* gxi = gx.data() + ((b * in_ + ic) * h) * w;
        const std::size_t base = ((o * in_pg + icl) * kh_) * kw_;
        for (std::size_t a = 0; a < kh_; ++a) {
          for (std::size_t k = 0; k < kw_; ++k) {
            const double wv = weight_[base + a * kw_ + k];
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(W, W - shift);
            double acc = 0.0;
            for (std::size_t r = 0; r < ho; ++r) {
              const double* gr = go + r * w;
              const double* xr = xi + (r + a) * w + shift;
              double* gxr = gxi + (r + a) * w + shift;
              for (std::ptrdiff_t t = lo; t < hi; ++t) {
                acc += gr[t] * xr[t];
                gxr[t] += wv * gr[t];
              }
            }
            weight_grad_[base + a * kw_ + k] += acc;
          }
        }
      }
    }
  }
  return gx;
}

void Conv2d::collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + "weight", as_span(weight_), as_span(weight_grad_)});
  if (has_bias_) out.push_back({prefix + "bias", as_span(bias_), as_span(bias_grad_)});
}

void Conv2d::zero_grad() {
  std::fill(weight_grad_.begin(), weight_grad_.end(), 0.0);
  std::fill(bias_grad_.begin(), bias_grad_.end(), 0.0);
}

// --- Linear -------------------------------------------------------------------

Linear::Linear(std::size_t in, std::size_t out, Rng& init) : in_(in), out_(out) {
  require(in > 0 && out > 0, ErrorCode::IncompatibleShape, "invalid linear geometry");
  weight_.resize(in * out);
  bias_.resize(out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(weight_, bound, init);
  init_uniform(bias_, bound, init);
  weight_grad_.assign(weight_.size(), 0.0);
  bias_grad_.assign(out, 0.0);
}

Tensor Linear::forward(const Tensor& x, ForwardContext&) {
  require(x.rank() >= 1 && x.trial_size() == in_, ErrorCode::IncompatibleShape,
          "linear layer expects " + std::to_string(in_) + " inputs per trial, got " + x.shape_string());
  input_ = x;
  const std::size_t n = x.dim(0);
  Tensor y({n, out_});
  for (std::size_t b = 0; b < n; ++b) {
    const double* xb = x.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wo = weight_.data() + o * in_;
      double s = bias_[o];
      for (std::size_t i = 0; i < in_; ++i) s += wo[i] * xb[i];
      y[b * out_ + o] = s;
    }
  }
  return y;
}

Tensor Linear::backward(const Tensor& grad) {
  const std::size_t n = input_.dim(0);
  Tensor gx(input_.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const double* xb = input_.data() + b * in_;
    double* gb = gx.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad[b * out_ + o];
      bias_grad_[o] += g;
      double* wg = weight_grad_.data() + o * in_;
      const double* wo = weight_.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        wg[i] += g * xb[i];
        gb[i] += g * wo[i];
      }
    }
  }
  return gx;
}

void Linear::collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + "weight", as_span(weight_), as_span(weight_grad_)});
  out.push_back({prefix + "bias", as_span(bias_), as_span(bias_grad_)});
}

void Linear::zero_grad() {
  std::fill(weight_grad_.begin(), weight_grad_.end(), 0.0);
  std::fill(bias_grad_.begin(), bias_grad_.end(), 0.0);
}

// --- Pool ---------------------------------------------------------------------

Pool::Pool(PoolKind kind, std::size_t size) : kind_(kind), size_(size) {
  require(size >= 1, ErrorCode::IncompatibleShape, "pool size must be positive");
}

Tensor Pool::forward(const Tensor& x, ForwardContext&) {
  require(x.rank() >= 2, ErrorCode::IncompatibleShape, "pool expects at least two axes");
  input_shape_ = x.shape();
  const std::size_t w = x.shape().back();
  const std::size_t wo = w / size_;
  require(wo >= 1, ErrorCode::IncompatibleShape,
          "pool of size " + std::to_string(size_) + " leaves no samples from " + x.shape_string());
  const std::size_t rows = x.size() / w;
  Tensor::Shape shape = x.shape();
  shape.back() = wo;
  Tensor y(shape);
  if (kind_ == PoolKind::Max) argmax_.assign(rows * wo, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * w;
    for (std::size_t j = 0; j < wo; ++j) {
      const double* cell = xr + j * size_;
      if (kind_ == PoolKind::Average) {
        double s = 0.0;
        for (std::size_t k = 0; k < size_; ++k) s += cell[k];
        y[r * wo + j] = s / static_cast<double>(size_);
      } else {
        std::size_t best = 0;
        for (std::size_t k = 1; k < size_; ++k)
          if (cell[k] > cell[best]) best = k;
        y[r * wo + j] = cell[best];
        argmax_[r * wo + j] = j * size_ + best;
      }
    }
  }
  return y;
}

Tensor Pool::backward(const Tensor& grad) {
  Tensor gx(input_shape_);
  const std::size_t w = input_shape_.back();
  const std::size_t wo = w / size_;
  const std::size_t rows = gx.size() / w;
  for (std::size_t r = 0; r < rows; ++r) {
    double* gr = gx.data() + r * w;
    for (std::size_t j = 0; j < wo; ++j) {
      const double g = grad[r * wo + j];
      if (kind_ == PoolKind::Average) {
        for (std::size_t k = 0; k < size_; ++k) gr[j * size_ + k] += g / static_cast<double>(size_);
      } else {
        gr[argmax_[r * wo + j]] += g;
      }
    }
  }
  return gx;
}

// --- Activation ---------------------------------------------------------------

Tensor ActivationLayer::forward(const Tensor& x, ForwardContext&) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    y[i] = v > 0.0 ? v : (f_ == Nonlinearity::Elu ? std::expm1(v) : 0.0);
  }
  return y;
}

Tensor ActivationLayer::backward(const Tensor& grad) {
  Tensor gx(grad.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double v = input_[i];
    const double d = v > 0.0 ? 1.0 : (f_ == Nonlinearity::Elu ? std::exp(v) : 0.0);
    gx[i] = grad[i] * d;
  }
  return gx;
}

// --- Dropout ------------------------------------------------------------------

Tensor Dropout::forward(const Tensor& x, ForwardContext& ctx) {
  if (!ctx.alignment.training || p_ <= 0.0) {
    mask_.clear();
    return x;
  }
  require(ctx.rng != nullptr, ErrorCode::InvalidArgument, "dropout needs a random source in training");
  const double keep = 1.0 / (1.0 - p_);
  mask_.resize(x.size());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = ctx.rng->bernoulli(p_) ? 0.0 : keep;
    y[i] = x[i] * mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad) {
  if (mask_.empty()) return grad;
  Tensor gx(grad.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) gx[i] = grad[i] * mask_[i];
  return gx;
}

// --- Reshape ------------------------------------------------------------------

Tensor Reshape::forward(const Tensor& x, ForwardContext&) {
  input_shape_ = x.shape();
  Tensor::Shape shape{x.dim(0)};
  shape.insert(shape.end(), trial_shape_.begin(), trial_shape_.end());
  require(element_count(shape) == x.size(), ErrorCode::IncompatibleShape,
          "cannot reshape " + x.shape_string());
  return x.reshaped(shape);
}

Tensor Reshape::backward(const Tensor& grad) { return grad.reshaped(input_shape_); }

// --- Norm / Capture -----------------------------------------------------------

Norm::Norm(std::size_t features, AlignmentMode mode, bool affine, std::optional<std::size_t> hook)
    : layer_(features, mode, affine), hook_(hook) {}

Tensor Norm::forward(const Tensor& x, ForwardContext& ctx) {
  Tensor y = layer_.forward(x, ctx.alignment);
  if (hook_ && ctx.captures) {
    if (ctx.captures->size() <= *hook_) ctx.captures->resize(*hook_ + 1);
    (*ctx.captures)[*hook_] = y;
  }
  return y;
}

Tensor Norm::backward(const Tensor& grad) { return layer_.backward(grad); }

void Norm::collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) {
  if (!layer_.affine()) return;
  out.push_back({prefix + "scale", as_span(layer_.scale()), as_span(layer_.scale_grad())});
  out.push_back({prefix + "shift", as_span(layer_.shift()), as_span(layer_.shift_grad())});
}

void Norm::collect_alignment(std::vector<AlignmentLayer*>& out) { out.push_back(&layer_); }

Tensor Capture::forward(const Tensor& x, ForwardContext& ctx) {
  if (ctx.captures) {
    if (ctx.captures->size() <= hook_) ctx.captures->resize(hook_ + 1);
    (*ctx.captures)[hook_] = x;
  }
  return x;
}

// --- Sequential ---------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, ForwardContext& ctx) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h, ctx);
  return h;
}

Tensor Sequential::backward(const Tensor& grad) {
  Tensor g = grad;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_parameters(prefix + std::to_string(i) + "." + layers_[i]->kind() + ".", out);
}

void Sequential::collect_alignment(std::vector<AlignmentLayer*>& out) {
  for (auto& layer : layers_) layer->collect_alignment(out);
}

void Sequential::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

// --- Concat -------------------------------------------------------------------

Sequential& Concat::add_branch() {
  branches_.push_back(std::make_unique<Sequential>());
  return *branches_.back();
}

Tensor Concat::forward(const Tensor& x, ForwardContext& ctx) {
  require(!branches_.empty(), ErrorCode::IncompatibleShape, "concat without branches");
  std::vector<Tensor> outs;
  widths_.clear();
  for (auto& b : branches_) {
    outs.push_back(b->forward(x, ctx));
    widths_.push_back(outs.back().dim(1));
  }
  Tensor::Shape shape = outs.front().shape();
  std::size_t total = 0;
  for (const auto& o : outs) {
    require(o.rank() == shape.size() && o.dim(0) == shape[0] && o.inner_size() == outs.front().inner_size(),
            ErrorCode::IncompatibleShape, "concat branches disagree in shape");
    total += o.dim(1);
  }
  shape[1] = total;
  output_shape_ = shape;
  Tensor y(shape);
  const std::size_t n = shape[0], inner = outs.front().inner_size();
  for (std::size_t b = 0; b < n; ++b) {
    double* dst = y.data() + b * total * inner;
    for (const auto& o : outs) {
      const auto src = o.trial(b);
      std::copy(src.begin(), src.end(), dst);
      dst += src.size();
    }
  }
  return y;
}

Tensor Concat::backward(const Tensor& grad) {
  const std::size_t n = output_shape_[0], total = output_shape_[1];
  const std::size_t inner = grad.size() / (n * total);
  Tensor gx;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    Tensor::Shape shape = output_shape_;
    shape[1] = widths_[i];
    Tensor part(shape);
    for (std::size_t b = 0; b < n; ++b) {
      const double* src = grad.data() + (b * total + offset) * inner;
      std::copy(src, src + widths_[i] * inner, part.data() + b * widths_[i] * inner);
    }
    Tensor g = branches_[i]->backward(part);
    if (i == 0) {
      gx = std::move(g);
    } else {
      for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g[k];
    }
    offset += widths_[i];
  }
  return gx;
}

void Concat::collect_parameters(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i)
    branches_[i]->collect_parameters(prefix + "branch" + std::to_string(i) + ".", out);
}

void Concat::collect_alignment(std::vector<AlignmentLayer*>& out) {
  for (auto& b : branches_) b->collect_alignment(out);
}

void Concat::zero_grad() {
  for (auto& b : branches_) b->zero_grad();
}

}  // namespace latalign
