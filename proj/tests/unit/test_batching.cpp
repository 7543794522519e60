#include "latalign/train/batching.hpp"

#include <map>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "latalign/io/synthetic.hpp"
#include "latalign/train/folds.hpp"
#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

std::vector<std::string> subject_names(std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back("P" + std::to_string(i));
  return s;
}

TrialArchive small_archive(std::size_t subjects = 6, std::size_t trials = 30) {
  SyntheticSpec s;
  s.n_subjects = subjects;
  s.trials_per_subject = trials;
  s.n_channels = 4;
  s.trial_s = 0.5;
  s.seed = 2;
  return generate_synthetic(s);
}

}  // namespace

TEST(Folds, PhysionetScale) {
  const auto folds = make_folds(subject_names(103), 10, 1);
  ASSERT_EQ(folds.size(), 10u);
  std::map<std::size_t, int> sizes;
  for (const auto& f : folds) ++sizes[f.val_subjects.size()];
  EXPECT_EQ(sizes[10], 7);
  EXPECT_EQ(sizes[11], 3);
}

TEST(Folds, PartitionProperties) {
  for (std::size_t n : {10u, 13u, 20u, 57u})
    for (std::size_t k : {2u, 5u, 10u}) {
      const auto names = subject_names(n);
      const auto folds = make_folds(names, k, 7);
      std::set<std::string> seen;
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.val_subjects.size());
        hi = std::max(hi, f.val_subjects.size());
        for (const auto& v : f.val_subjects) EXPECT_TRUE(seen.insert(v).second) << v << " in two folds";
        EXPECT_EQ(f.train_subjects.size() + f.val_subjects.size(), n);
        for (const auto& t : f.train_subjects)
          EXPECT_EQ(std::count(f.val_subjects.begin(), f.val_subjects.end(), t), 0);
      }
      EXPECT_EQ(seen.size(), n);
      EXPECT_LE(hi - lo, 1u);
    }
}

TEST(Folds, LeaveOneOutAndDeterminism) {
  const auto folds = make_folds(subject_names(10), 10, 3);
  for (const auto& f : folds) EXPECT_EQ(f.val_subjects.size(), 1u);
  const auto again = make_folds(subject_names(10), 10, 3);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(folds[i].val_subjects, again[i].val_subjects);
  auto shuffled = subject_names(10);
  std::reverse(shuffled.begin(), shuffled.end());
  const auto reordered = make_folds(shuffled, 10, 3);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(folds[i].val_subjects, reordered[i].val_subjects);
  EXPECT_ERROR_CODE(make_folds(subject_names(4), 5, 1), ErrorCode::TooFewSubjects);
}

TEST(Composition, BalancedSplits) {
  BatchPlan plan;
  Rng rng(1);
  EXPECT_EQ(draw_composition(plan, 3, rng), (std::vector<std::size_t>{4, 4, 4}));
  plan.trials_per_subject = 13;
  for (int k = 0; k < 50; ++k) {
    const auto c = draw_composition(plan, 3, rng);
    EXPECT_EQ(c[0] + c[1] + c[2], 13u);
    EXPECT_LE(*std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end()), 1u);
  }
}

TEST(Composition, FixedRatio) {
  const std::vector<double> ratio{5.0, 1.0};
  EXPECT_EQ(fixed_ratio_counts(ratio, 12), (std::vector<std::size_t>{10, 2}));
  EXPECT_ERROR_CODE(fixed_ratio_counts(ratio, 13), ErrorCode::ConfigInvalid);
  BatchPlan plan;
  plan.class_balance = ClassBalance::FixedRatio;
  plan.ratio = ratio;
  Rng rng(2);
  EXPECT_EQ(draw_composition(plan, 2, rng), (std::vector<std::size_t>{10, 2}));
}

TEST(Composition, RandomUnbalancedIsUniformOverCompositions) {
  BatchPlan plan;
  plan.class_balance = ClassBalance::RandomUnbalanced;
  Rng rng(12345);
  std::map<std::vector<std::size_t>, long> freq;
  const long draws = 100000;
  for (long d = 0; d < draws; ++d) ++freq[draw_composition(plan, 3, rng)];
  ASSERT_EQ(freq.size(), 91u);
  const double expected = double(draws) / 91.0;
  double chi2 = 0.0;
  for (const auto& [c, f] : freq) {
    EXPECT_EQ(c[0] + c[1] + c[2], 12u);
    chi2 += (double(f) - expected) * (double(f) - expected) / expected;
  }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(90.0), chi2));
  EXPECT_GT(p, 0.001) << "chi2 = " << chi2;
}

TEST(BatchComposer, GroupStructureAndAccounting) {
  const TrialArchive a = small_archive();
  BatchPlan plan;
  plan.subjects_per_batch = 3;
  plan.trials_per_subject = 6;
  const std::vector<std::size_t> sessions{0, 1, 2, 3, 4};
  const BatchComposer composer(a, sessions, plan);
  EXPECT_EQ(composer.batches_per_epoch(), 150u / 18u);
  const auto batches = composer.epoch(9);
  ASSERT_EQ(batches.size(), 8u);
  for (const auto& b : batches) {
    EXPECT_EQ(b.batch.size(), 18u);
    ASSERT_EQ(b.groups.size(), 3u);
    std::set<std::size_t> used;
    for (const auto& g : b.groups) {
      ASSERT_EQ(g.size(), 6u);
      const std::size_t s = b.refs[g.front()].session;
      EXPECT_TRUE(used.insert(s).second) << "session twice in one batch";
      std::vector<int> counts(3, 0);
      std::set<std::size_t> trials;
      for (std::size_t i : g) {
        EXPECT_EQ(b.refs[i].session, s);
        EXPECT_TRUE(trials.insert(b.refs[i].trial).second);
        EXPECT_EQ(b.batch.labels[i], a.sessions[s].labels[b.refs[i].trial]);
        ++counts[std::size_t(b.batch.labels[i])];
      }
      EXPECT_EQ(counts, (std::vector<int>{2, 2, 2}));
      EXPECT_NE(std::find(sessions.begin(), sessions.end(), s), sessions.end());
    }
  }
}

TEST(BatchComposer, DeterministicPerEpochSeed) {
  const TrialArchive a = small_archive();
  const BatchComposer composer(a, {0, 1, 2, 3, 4, 5}, BatchPlan{});
  const auto x = composer.epoch(4), y = composer.epoch(4), z = composer.epoch(5);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t b = 0; b < x.size(); ++b) EXPECT_EQ(x[b].refs, y[b].refs);
  EXPECT_NE(x[0].refs, z[0].refs);
}

TEST(BatchComposer, InsufficientTrialsNamesSession) {
  TrialArchive a = small_archive(4, 30);
  a.sessions[2].n_trials = 5;
  a.sessions[2].labels.resize(5);
  a.sessions[2].data.resize(5 * a.sessions[2].n_channels * a.sessions[2].n_times);
  try {
    BatchComposer(a, {0, 1, 2, 3}, BatchPlan{});
    FAIL() << "expected InsufficientTrials";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientTrials);
    EXPECT_NE(std::string(e.what()).find(a.sessions[2].subject), std::string::npos);
  }
  EXPECT_ERROR_CODE(BatchComposer(a, {0, 1}, BatchPlan{}), ErrorCode::TooFewSubjects);
}

TEST(BatchPlan, JsonRoundTrip) {
  BatchPlan plan;
  plan.class_balance = ClassBalance::FixedRatio;
  plan.ratio = {5, 1};
  plan.seed = 4;
  const nlohmann::json j = plan;
  EXPECT_EQ(nlohmann::json(j.get<BatchPlan>()), j);
  EXPECT_ERROR_CODE(parse_class_balance("skewed"), ErrorCode::ConfigInvalid);
}
