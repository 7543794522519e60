#include "latalign/eval/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "latalign/error.hpp"
#include "latalign/eval/metrics.hpp"
#include "latalign/random.hpp"

namespace latalign {

CompositionGrid imbalance_sweep(Model& model, const TrialArchive& archive,
                                std::span<const std::size_t> sessions, const SweepOptions& options) {
  const std::size_t k = archive.n_classes();
  require(options.repetitions >= 1, ErrorCode::ConfigInvalid, "sweep needs at least one repetition");
  require(!sessions.empty(), ErrorCode::InsufficientTrials, "sweep needs at least one session");
  std::vector<double> probs = options.class_probs;
  if (probs.empty()) probs.assign(k, 1.0 / static_cast<double>(k));
  CompositionGrid grid = make_grid(options.n, k, probs);

  struct SessionData {
    TrialBatch batch;
    std::vector<std::vector<std::size_t>> by_class;
    Tensor eval_x;
    std::vector<int> eval_labels;
  };
  std::vector<SessionData> data;
  for (std::size_t s : sessions) {
    SessionData d;
    d.batch = session_batch(archive, s);
    d.by_class.resize(k);
    for (std::size_t i = 0; i < d.batch.size(); ++i) d.by_class.at(static_cast<std::size_t>(d.batch.labels[i])).push_back(i);
    std::size_t smallest = d.batch.size();
    for (const auto& c : d.by_class) smallest = std::min(smallest, c.size());
    const auto& sess = archive.sessions[s];
    for (std::size_t c = 0; c < k; ++c)
      require(d.by_class[c].size() >= options.n, ErrorCode::InsufficientTrials,
              "session " + sess.subject + "/" + sess.session + " has " + std::to_string(d.by_class[c].size()) +
                  " trials of class " + archive.class_names[c] + ", the sweep needs " + std::to_string(options.n));
    const std::size_t per_class = options.eval_per_class == 0 ? smallest : std::min(smallest, options.eval_per_class);
    Rng rng(derive_seed(options.seed, s, 0xE7A1));
    std::vector<std::size_t> eval;
    for (std::size_t c = 0; c < k; ++c) {
      auto pool = d.by_class[c];
      rng.shuffle(pool);
      eval.insert(eval.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    d.eval_x = d.batch.signals.select(eval);
    for (auto i : eval) d.eval_labels.push_back(d.batch.labels[i]);
    data.push_back(std::move(d));
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Composition& comp = grid.compositions[g];
    Rng rng(derive_seed(options.seed, g, 0x5EE9));
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (auto& d : data) {
      for (std::size_t r = 0; r < options.repetitions; ++r) {
        std::vector<std::size_t> context;
        for (std::size_t c = 0; c < k; ++c) {
          auto pool = d.by_class[c];
          // Partial Fisher-Yates: the first comp[c] entries are a uniform draw without replacement.
          for (std::size_t i = 0; i < comp[c]; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
          context.insert(context.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(comp[c]));
        }
        const Tensor scores = infer_with_context(model, d.batch.signals.select(context), d.eval_x, options.method);
        std::vector<int> pred(d.eval_labels.size());
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = argmax_row(scores, i);
        const double acc = balanced_accuracy(d.eval_labels, pred, k);
        sum += acc;
        sum_sq += acc * acc;
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    grid.accuracy[g] = mean;
    if (count > 1) {
      const double var = std::max(0.0, (sum_sq - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1));
      grid.standard_error[g] = std::sqrt(var / static_cast<double>(count));
    }
  }
  return grid;
}

}  // namespace latalign
