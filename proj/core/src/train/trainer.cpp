#include "latalign/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "latalign/align/whitening.hpp"
#include "latalign/error.hpp"
#include "latalign/eval/metrics.hpp"
#include "latalign/train/optimizer.hpp"

namespace latalign {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Baseline: return "baseline";
    case Method::Euclidean: return "euclidean";
    case Method::Adaptive: return "adaptive";
    case Method::Latent: return "latent";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "baseline") return Method::Baseline;
  if (text == "euclidean") return Method::Euclidean;
  if (text == "adaptive") return Method::Adaptive;
  if (text == "latent") return Method::Latent;
  fail(ErrorCode::ConfigInvalid, "unknown method '" + std::string(text) + "'");
}

AlignmentMode alignment_mode_for(Method method) {
  switch (method) {
    case Method::Latent: return AlignmentMode::Latent;
    case Method::Adaptive: return AlignmentMode::AdaptiveBn;
    default: return AlignmentMode::PlainBn;
  }
}

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::ConfigInvalid,
          "learning_rate must be finite and non-negative");
  require(weight_decay >= 0.0, ErrorCode::ConfigInvalid, "weight_decay must be non-negative");
  require(epochs >= 1, ErrorCode::ConfigInvalid, "epochs must be positive");
  require(fold_count >= 1, ErrorCode::ConfigInvalid, "fold_count must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay}, {"epochs", c.epochs},
       {"class_weights", c.class_weights}, {"seed", c.seed},         {"fold_count", c.fold_count},
       {"eval_every", c.eval_every}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.epochs = j.value("epochs", d.epochs);
  c.class_weights = j.value("class_weights", d.class_weights);
  c.seed = j.value("seed", d.seed);
  c.fold_count = j.value("fold_count", d.fold_count);
  c.eval_every = j.value("eval_every", d.eval_every);
}

std::vector<double> inverse_frequency_weights(const TrialArchive& archive,
                                              std::span<const std::size_t> sessions) {
  const std::size_t k = archive.n_classes();
  std::vector<double> counts(k, 0.0);
  double total = 0.0;
  for (std::size_t s : sessions)
    for (int label : archive.sessions.at(s).labels) {
      counts.at(static_cast<std::size_t>(label)) += 1.0;
      total += 1.0;
    }
  std::vector<double> w(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0.0) w[c] = total / (static_cast<double>(k) * counts[c]);
  return w;
}

double weighted_cross_entropy(const Tensor& scores, std::span<const int> labels,
                              std::span<const double> weights, Tensor* grad) {
  const std::size_t n = scores.dim(0), k = scores.dim(1);
  require(labels.size() == n, ErrorCode::ShapeMismatch, "one label per score row required");
  if (grad) *grad = Tensor(scores.shape());
  double loss = 0.0, wsum = 0.0;
  std::vector<double> p(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = scores.data() + i * k;
    const double mx = *std::max_element(s, s + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - mx);
    const auto y = static_cast<std::size_t>(labels[i]);
    const double w = weights.empty() ? 1.0 : weights[y];
    loss += w * (std::log(z) + mx - s[y]);
    wsum += w;
    if (grad)
      for (std::size_t c = 0; c < k; ++c) (*grad)[i * k + c] = w * (std::exp(s[c] - mx) / z - (c == y ? 1.0 : 0.0));
  }
  require(wsum > 0.0, ErrorCode::InvalidArgument, "batch carries zero total class weight");
  if (grad)
    for (double& g : grad->values()) g /= wsum;
  return loss / wsum;
}

namespace {

Tensor whiten_context(const Tensor& trials) { return euclidean_align(trials, fit_whitener(trials)); }

Tensor concat_trials(const Tensor& a, const Tensor& b) {
  require(a.trial_size() == b.trial_size(), ErrorCode::ShapeMismatch, "trial shapes differ");
  Tensor::Shape shape = a.shape();
  shape[0] = a.dim(0) + b.dim(0);
  std::vector<double> v(a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Tensor(shape, std::move(v));
}

Tensor rows(const Tensor& scores, std::size_t first, std::size_t count) {
  const std::size_t k = scores.dim(1);
  std::vector<double> v(scores.data() + first * k, scores.data() + (first + count) * k);
  return Tensor({count, k}, std::move(v));
}

}  // namespace

Tensor infer(Model& model, const Tensor& x, Method method) {
  ForwardOptions options;
  switch (method) {
    case Method::Baseline:
      return model.forward(x, options).scores;
    case Method::Euclidean:
      return model.forward(whiten_context(x), options).scores;
    case Method::Adaptive:
    case Method::Latent: {
      require(x.dim(0) >= 2, ErrorCode::SingleTrialContext,
              "subject-wise inference needs at least two trials, got " + std::to_string(x.dim(0)));
      if (method == Method::Adaptive) {
        adapt_batchnorm(model, x);
        Tensor s = model.forward(x, options).scores;
        restore_batchnorm(model);
        return s;
      }
      options.collect_context = true;
      Tensor s = model.forward(x, options).scores;
      restore_batchnorm(model);
      return s;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

Tensor infer_streaming(Model& model, const Tensor& context, const Tensor& new_trial, Method method) {
  if (method == Method::Baseline) return infer(model, new_trial, method);
  const Tensor all = concat_trials(context, new_trial);
  return rows(infer(model, all, method), context.dim(0), new_trial.dim(0));
}

Tensor infer_with_context(Model& model, const Tensor& context, const Tensor& targets, Method method) {
  ForwardOptions options;
  switch (method) {
    case Method::Baseline:
      return model.forward(targets, options).scores;
    case Method::Euclidean: {
      const SpatialWhitener w = fit_whitener(context);
      return model.forward(euclidean_align(targets, w), options).scores;
    }
    case Method::Adaptive:
    case Method::Latent: {
      require(context.dim(0) >= 2, ErrorCode::SingleTrialContext, "alignment context needs at least two trials");
      adapt_batchnorm(model, context);
      Tensor s = model.forward(targets, options).scores;
      restore_batchnorm(model);
      return s;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

int argmax_row(const Tensor& scores, std::size_t row) {
  const std::size_t k = scores.dim(1);
  const double* s = scores.data() + row * k;
  return static_cast<int>(std::max_element(s, s + k) - s);
}

Predictions predict_sessions(Model& model, const TrialArchive& archive,
                             std::span<const std::size_t> sessions, Method method) {
  Predictions out;
  for (std::size_t s : sessions) {
    const TrialBatch batch = session_batch(archive, s);
    const Tensor scores = infer(model, batch.signals, method);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.labels.push_back(batch.labels[i]);
      out.predicted.push_back(argmax_row(scores, i));
      out.sessions.push_back(s);
    }
  }
  return out;
}

FoldOutcome train_fold(const TrialArchive& archive, const Fold& fold, std::size_t fold_index,
                       const ModelSpec& spec_in, Method method, const BatchPlan& plan,
                       const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  ModelSpec spec = spec_in;
  spec.alignment_mode = alignment_mode_for(method);

  const auto train_sessions = archive.sessions_of(fold.train_subjects);
  const auto val_sessions = archive.sessions_of(fold.val_subjects);
  require(!train_sessions.empty(), ErrorCode::TooFewSubjects, "fold has no training sessions");
  const std::set<std::string> val_set(fold.val_subjects.begin(), fold.val_subjects.end());

  FoldOutcome out;
  out.fold = fold_index;
  out.subjects = fold;
  out.model = build_model(spec, derive_seed(config.seed, fold_index, 0x1417));
  out.model->seed_dropout(derive_seed(config.seed, fold_index, 0xD80));
  Model& model = *out.model;

  const BatchComposer composer(archive, train_sessions, plan);
  const std::vector<double> weights =
      config.class_weights ? inverse_frequency_weights(archive, train_sessions) : std::vector<double>{};
  Adam adam(model.parameters(), {config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = composer.epoch(derive_seed(config.seed, fold_index, 0xE0000 + epoch));
    EpochRecord rec;
    rec.epoch = epoch + 1;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const ComposedBatch& cb = batches[b];
      for (const auto& ref : cb.refs)
        require(!val_set.count(archive.sessions[ref.session].subject), ErrorCode::InvalidArgument,
                "validation subject leaked into a training batch");
      Tensor x = cb.batch.signals;
      if (method == Method::Euclidean) {
        for (const auto& group : cb.groups) {
          const Tensor aligned = whiten_context(x.select(group));
          for (std::size_t g = 0; g < group.size(); ++g) {
            const auto src = aligned.trial(g);
            std::copy(src.begin(), src.end(), x.trial(group[g]).begin());
          }
        }
      }
      const auto diverged = [&] {
        fail(ErrorCode::DivergedLoss, "loss became non-finite in fold " + std::to_string(fold_index) +
                                          ", epoch " + std::to_string(epoch + 1) + ", batch " +
                                          std::to_string(b + 1));
      };
      ForwardOptions options;
      options.training = true;
      options.groups = method == Method::Latent ? &cb.groups : nullptr;
      Tensor scores;
      try {
        scores = model.forward(x, options).scores;
      } catch (const Error& e) {
        // Blown-up parameters surface as non-finite activations inside the network.
        if (e.code() != ErrorCode::NonFiniteInput || b + epoch == 0) throw;
        diverged();
      }
      Tensor grad;
      const double loss = weighted_cross_entropy(scores, cb.batch.labels, weights, &grad);
      if (!std::isfinite(loss)) diverged();
      loss_sum += loss;
      model.zero_grad();
      model.backward(grad);
      adam.step();
    }
    rec.batches = batches.size();
    rec.train_loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
    const bool last = epoch + 1 == config.epochs;
    if (!val_sessions.empty() && (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0))) {
      const Predictions p = predict_sessions(model, archive, val_sessions, method);
      rec.val_balanced_accuracy = balanced_accuracy(p.labels, p.predicted, archive.n_classes());
    }
    if (progress) progress(rec);
    out.curve.push_back(rec);
  }
  if (!out.curve.empty() && out.curve.back().val_balanced_accuracy)
    out.val_balanced_accuracy = *out.curve.back().val_balanced_accuracy;
  return out;
}

}  // namespace latalign
