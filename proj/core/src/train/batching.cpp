#include "latalign/train/batching.hpp"

#include <cmath>
#include <deque>
#include <numeric>

#include "latalign/error.hpp"

namespace latalign {

std::string_view to_string(ClassBalance balance) {
  switch (balance) {
    case ClassBalance::Balanced: return "balanced";
    case ClassBalance::RandomUnbalanced: return "random_unbalanced";
    case ClassBalance::FixedRatio: return "fixed_ratio";
  }
  return "unknown";
}

ClassBalance parse_class_balance(std::string_view text) {
  if (text == "balanced") return ClassBalance::Balanced;
  if (text == "random_unbalanced") return ClassBalance::RandomUnbalanced;
  if (text == "fixed_ratio") return ClassBalance::FixedRatio;
  fail(ErrorCode::ConfigInvalid, "unknown class_balance '" + std::string(text) + "'");
}

void BatchPlan::validate(std::size_t n_classes) const {
  require(subjects_per_batch >= 1, ErrorCode::ConfigInvalid, "subjects_per_batch must be positive");
  require(trials_per_subject >= 2, ErrorCode::ConfigInvalid, "trials_per_subject must be at least 2");
  if (class_balance == ClassBalance::FixedRatio) {
    require(ratio.size() == n_classes, ErrorCode::ConfigInvalid, "ratio needs one entry per class");
    fixed_ratio_counts(ratio, trials_per_subject);
  }
}

void to_json(nlohmann::json& j, const BatchPlan& p) {
  j = {{"subjects_per_batch", p.subjects_per_batch},
       {"trials_per_subject", p.trials_per_subject},
       {"class_balance", std::string(to_string(p.class_balance))},
       {"ratio", p.ratio},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, BatchPlan& p) {
  const BatchPlan d;
  p.subjects_per_batch = j.value("subjects_per_batch", d.subjects_per_batch);
  p.trials_per_subject = j.value("trials_per_subject", d.trials_per_subject);
  p.class_balance = parse_class_balance(j.value("class_balance", std::string("balanced")));
  p.ratio = j.value("ratio", d.ratio);
  p.seed = j.value("seed", d.seed);
}

std::vector<std::size_t> fixed_ratio_counts(std::span<const double> ratio, std::size_t n) {
  const double total = std::accumulate(ratio.begin(), ratio.end(), 0.0);
  require(total > 0.0, ErrorCode::ConfigInvalid, "ratio must have a positive sum");
  std::vector<std::size_t> counts;
  std::size_t sum = 0;
  for (double r : ratio) {
    require(r >= 0.0, ErrorCode::ConfigInvalid, "ratio entries must be non-negative");
    const double exact = r / total * static_cast<double>(n);
    const auto c = static_cast<std::size_t>(std::llround(exact));
    require(std::abs(exact - static_cast<double>(c)) < 1e-9, ErrorCode::ConfigInvalid,
            "ratio does not split " + std::to_string(n) + " trials exactly");
    counts.push_back(c);
    sum += c;
  }
  require(sum == n, ErrorCode::ConfigInvalid, "ratio does not split the trials exactly");
  return counts;
}

std::vector<std::size_t> draw_composition(const BatchPlan& plan, std::size_t k, Rng& rng) {
  const std::size_t n = plan.trials_per_subject;
  std::vector<std::size_t> counts(k, 0);
  switch (plan.class_balance) {
    case ClassBalance::Balanced: {
      for (auto& c : counts) c = n / k;
      const auto order = rng.permutation(k);
      for (std::size_t r = 0; r < n % k; ++r) ++counts[order[r]];
      break;
    }
    case ClassBalance::RandomUnbalanced: {
      // Stars and bars: k - 1 distinct bar positions among n + k - 1 slots
      // give every weak composition of n into k parts with equal probability.
      std::vector<std::size_t> slots(n + k - 1);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      for (std::size_t i = 0; i + 1 < k; ++i) std::swap(slots[i], slots[i + rng.index(slots.size() - i)]);
      std::vector<std::size_t> bars(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(k - 1));
      std::sort(bars.begin(), bars.end());
      std::size_t prev = 0;
      for (std::size_t i = 0; i + 1 < k; ++i) {
        counts[i] = bars[i] - prev;
        prev = bars[i] + 1;
      }
      counts[k - 1] = n + k - 1 - prev;
      break;
    }
    case ClassBalance::FixedRatio:
      counts = fixed_ratio_counts(plan.ratio, n);
      break;
  }
  return counts;
}

BatchComposer::BatchComposer(const TrialArchive& archive, std::vector<std::size_t> sessions,
                             BatchPlan plan)
    : archive_(archive), sessions_(std::move(sessions)), plan_(std::move(plan)) {
  const std::size_t k = archive.n_classes();
  plan_.validate(k);
  require(sessions_.size() >= plan_.subjects_per_batch, ErrorCode::TooFewSubjects,
          "batches need " + std::to_string(plan_.subjects_per_batch) + " sessions, only " +
              std::to_string(sessions_.size()) + " available");
  for (std::size_t s : sessions_) {
    const auto& sess = archive.sessions.at(s);
    require(sess.n_trials >= plan_.trials_per_subject, ErrorCode::InsufficientTrials,
            "session " + sess.subject + "/" + sess.session + " has " + std::to_string(sess.n_trials) +
                " trials, batches need " + std::to_string(plan_.trials_per_subject));
    std::vector<std::vector<std::size_t>> pools(k);
    for (std::size_t i = 0; i < sess.n_trials; ++i) {
      const int label = sess.labels[i];
      if (label >= 0 && static_cast<std::size_t>(label) < k) pools[static_cast<std::size_t>(label)].push_back(i);
    }
    by_class_.push_back(std::move(pools));
    total_trials_ += sess.n_trials;
  }
}

std::size_t BatchComposer::batches_per_epoch() const noexcept { return total_trials_ / plan_.batch_size(); }

std::vector<ComposedBatch> BatchComposer::epoch(std::uint64_t epoch_seed) const {
  Rng rng(derive_seed(plan_.seed, epoch_seed));
  const std::size_t k = archive_.n_classes();
  const std::size_t n_sessions = sessions_.size();

  std::vector<std::vector<std::vector<std::size_t>>> pools(n_sessions, std::vector<std::vector<std::size_t>>(k));
  auto draw = [&](std::size_t local, std::size_t cls) {
    auto& pool = pools[local][cls];
    if (pool.empty()) {
      pool = by_class_[local][cls];
      const auto& sess = archive_.sessions[sessions_[local]];
      require(!pool.empty(), ErrorCode::InsufficientTrials,
              "session " + sess.subject + "/" + sess.session + " has no trials of class " +
                  archive_.class_names[cls]);
      rng.shuffle(pool);
    }
    const std::size_t trial = pool.back();
    pool.pop_back();
    return trial;
  };

  std::deque<std::size_t> queue;
  auto refill = [&]() {
    auto order = rng.permutation(n_sessions);
    queue.insert(queue.end(), order.begin(), order.end());
  };

  std::vector<ComposedBatch> batches;
  for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
    std::vector<std::size_t> chosen;
    while (chosen.size() < plan_.subjects_per_batch) {
      if (queue.empty()) refill();
      auto it = queue.begin();
      while (it != queue.end() && std::find(chosen.begin(), chosen.end(), *it) != chosen.end()) ++it;
      if (it == queue.end()) {
        refill();
        continue;
      }
      chosen.push_back(*it);
      queue.erase(it);
    }

    ComposedBatch cb;
    for (std::size_t local : chosen) {
      const auto counts = draw_composition(plan_, k, rng);
      std::vector<std::size_t> group;
      for (std::size_t cls = 0; cls < k; ++cls)
        for (std::size_t c = 0; c < counts[cls]; ++c) {
          group.push_back(cb.refs.size());
          cb.refs.push_back({sessions_[local], draw(local, cls)});
        }
      cb.groups.push_back(std::move(group));
    }
    cb.batch = gather_trials(archive_, cb.refs);
    batches.push_back(std::move(cb));
  }
  return batches;
}

}  // namespace latalign
