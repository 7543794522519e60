#include "latalign/io/synthetic.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "latalign/eval/metrics.hpp"
#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_subjects = 6;
  s.trials_per_subject = 30;
  s.seed = 17;
  return s;
}

// Leave-half-the-subjects-out nearest-centroid decoder on per-channel means of
// four time bins; a cheap, model-free stand-in for "any decoder".
double centroid_accuracy(const TrialArchive& a) {
  const std::size_t bins = 4;
  auto features = [&](const ArchiveSession& s, std::size_t i) {
    std::vector<double> f(s.n_channels * bins, 0.0);
    const auto x = s.trial(i);
    for (std::size_t c = 0; c < s.n_channels; ++c)
      for (std::size_t t = 0; t < s.n_times; ++t) f[c * bins + t * bins / s.n_times] += x[c * s.n_times + t];
    return f;
  };
  const std::size_t k = a.n_classes();
  const std::size_t half = a.sessions.size() / 2;
  std::vector<int> truth, pred;
  for (int fold = 0; fold < 2; ++fold) {
    std::vector<std::vector<double>> centroid(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t s = 0; s < a.sessions.size(); ++s) {
      if ((s < half) == (fold == 0)) continue;
      for (std::size_t i = 0; i < a.sessions[s].n_trials; ++i) {
        const auto f = features(a.sessions[s], i);
        auto& c = centroid[std::size_t(a.sessions[s].labels[i])];
        c.resize(f.size(), 0.0);
        for (std::size_t j = 0; j < f.size(); ++j) c[j] += f[j];
        ++count[std::size_t(a.sessions[s].labels[i])];
      }
    }
    for (std::size_t c = 0; c < k; ++c)
      for (double& v : centroid[c]) v /= double(count[c]);
    for (std::size_t s = 0; s < a.sessions.size(); ++s) {
      if ((s < half) != (fold == 0)) continue;
      for (std::size_t i = 0; i < a.sessions[s].n_trials; ++i) {
        const auto f = features(a.sessions[s], i);
        double best = 1e300;
        int arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
          double d = 0.0;
          for (std::size_t j = 0; j < f.size(); ++j) d += (f[j] - centroid[c][j]) * (f[j] - centroid[c][j]);
          if (d < best) best = d, arg = int(c);
        }
        truth.push_back(a.sessions[s].labels[i]);
        pred.push_back(arg);
      }
    }
  }
  return balanced_accuracy(truth, pred, k);
}

}  // namespace

TEST(Synthetic, ShapeAndLabels) {
  const TrialArchive a = generate_synthetic(small_spec());
  ASSERT_EQ(a.sessions.size(), 6u);
  EXPECT_EQ(a.channel_names.size(), 8u);
  EXPECT_EQ(a.class_names.size(), 3u);
  EXPECT_DOUBLE_EQ(a.rate_hz, 64.0);
  for (const auto& s : a.sessions) {
    EXPECT_EQ(s.n_trials, 30u);
    EXPECT_EQ(s.n_times, 64u);
    std::vector<int> count(3, 0);
    for (int l : s.labels) ++count[std::size_t(l)];
    EXPECT_EQ(count, (std::vector<int>{10, 10, 10}));
  }
  EXPECT_EQ(a.subjects().front(), "S01");
}

TEST(Synthetic, SameSeedIsByteIdentical) {
  const auto dir_a = std::filesystem::temp_directory_path() / "latalign_syn_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "latalign_syn_b";
  write_trial_archive(generate_synthetic(small_spec()), dir_a);
  write_trial_archive(generate_synthetic(small_spec()), dir_b);
  for (const auto& e : std::filesystem::directory_iterator(dir_a)) {
    std::ifstream fa(e.path(), std::ios::binary), fb(dir_b / e.path().filename(), std::ios::binary);
    const std::string a((std::istreambuf_iterator<char>(fa)), {}), b((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(a, b) << e.path().filename();
  }
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  SyntheticSpec other = small_spec();
  other.seed = 18;
  EXPECT_NE(generate_synthetic(other).sessions[0].data, generate_synthetic(small_spec()).sessions[0].data);
}

TEST(Synthetic, ClassProportionsOverride) {
  SyntheticSpec s = small_spec();
  s.class_proportions = {0.5, 0.3, 0.2};
  const TrialArchive a = generate_synthetic(s);
  std::vector<int> count(3, 0);
  for (int l : a.sessions[0].labels) ++count[std::size_t(l)];
  EXPECT_EQ(count, (std::vector<int>{15, 9, 6}));
}

TEST(Synthetic, ZeroSnrIsClassBlind) {
  SyntheticSpec s = small_spec();
  s.snr = 0.0;
  s.n_subjects = 8;
  s.trials_per_subject = 60;
  const double acc = centroid_accuracy(generate_synthetic(s));
  // 480 predictions, chance 1/3.
  const double sigma = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 480.0);
  EXPECT_LT(std::abs(acc - 1.0 / 3.0), 3.0 * sigma);
}

TEST(Synthetic, ArtifactConfinedToWindow) {
  SyntheticSpec s = small_spec();
  s.snr = 0.0;
  s.trial_s = 2.0;
  s.artifact.enabled = true;
  s.artifact.start_s = 0.0;
  s.artifact.end_s = 1.0;
  SyntheticSpec clean = s;
  clean.artifact.enabled = false;
  const TrialArchive with = generate_synthetic(s);
  const TrialArchive without = generate_synthetic(clean);
  double inside = 0.0, outside = 0.0;
  for (std::size_t k = 0; k < with.sessions.size(); ++k) {
    const auto& a = with.sessions[k];
    const auto& b = without.sessions[k];
    for (std::size_t i = 0; i < a.n_trials; ++i)
      for (std::size_t c = 0; c < a.n_channels; ++c)
        for (std::size_t t = 0; t < a.n_times; ++t) {
          const double d = std::abs(a.trial(i)[c * a.n_times + t] - b.trial(i)[c * a.n_times + t]);
          (t < 64 ? inside : outside) += d;
        }
  }
  EXPECT_GT(inside, 0.0);
  EXPECT_EQ(outside, 0.0);

  TrialArchive early = crop_archive(with, 0.0, 1.0), late = crop_archive(with, 1.0, 2.0);
  const double acc_early = centroid_accuracy(early);
  const double acc_late = centroid_accuracy(late);
  EXPECT_GE(acc_early - 1.0 / 3.0, 0.20);
  EXPECT_LT(std::abs(acc_late - 1.0 / 3.0), 0.1);
}

TEST(Synthetic, SpecJsonRoundTrip) {
  SyntheticSpec s = small_spec();
  s.artifact.enabled = true;
  s.class_proportions = {0.2, 0.3, 0.5};
  s.class_frequency_step = 0.0;
  const nlohmann::json j = s;
  EXPECT_EQ(j.at("class_frequency_step"), 0.0);
  const SyntheticSpec back = j.get<SyntheticSpec>();
  EXPECT_EQ(nlohmann::json(back), j);
  nlohmann::json bad = j;
  bad["n_subject"] = 3;
  EXPECT_ERROR_CODE(bad.get<SyntheticSpec>(), ErrorCode::ConfigInvalid);
}

TEST(Synthetic, ValidateRejectsBadSpecs) {
  SyntheticSpec s = small_spec();
  s.n_classes = 1;
  EXPECT_ERROR_CODE(s.validate(), ErrorCode::ConfigInvalid);
  s = small_spec();
  s.snr = -1.0;
  EXPECT_ERROR_CODE(s.validate(), ErrorCode::ConfigInvalid);
  s = small_spec();
  s.class_frequency_step = -0.1;
  EXPECT_ERROR_CODE(s.validate(), ErrorCode::ConfigInvalid);
  s = small_spec();
  s.artifact.enabled = true;
  s.artifact.end_s = 5.0;
  EXPECT_ERROR_CODE(s.validate(), ErrorCode::ConfigInvalid);
  EXPECT_EQ(synthetic_channel_names(3), (std::vector<std::string>{"Fpz", "F7", "F8"}));
}
