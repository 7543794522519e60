#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "latalign/eval/erp.hpp"
#include "latalign/eval/montage.hpp"
#include "latalign/eval/projection.hpp"
#include "latalign/eval/sweep.hpp"
#include "latalign/eval/topography.hpp"
#include "latalign/io/synthetic.hpp"
#include "latalign/signal/filter.hpp"
#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

double procrustes_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  // Both centered; best orthogonal map from b to a.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
  return (b * r - a).norm();
}

TrialArchive tiny_archive() {
  SyntheticSpec s;
  s.n_subjects = 3;
  s.trials_per_subject = 30;
  s.n_channels = 4;
  s.seed = 6;
  return generate_synthetic(s);
}

}  // namespace

TEST(Montage, StandardLayout) {
  const Montage m = standard_1010();
  for (const char* e : {"Fpz", "F7", "F8", "Cz", "C3", "C4", "Oz", "T7", "FCz", "AF3", "PO8", "Iz"})
    ASSERT_NE(m.find(e), nullptr) << e;
  const Electrode* cz = m.find("Cz");
  EXPECT_NEAR(cz->z, 1.0, 1e-9);
  EXPECT_GT(m.find("Fpz")->y, 0.9);
  EXPECT_LT(m.find("F7")->x, 0.0);
  EXPECT_GT(m.find("F8")->x, 0.0);
  for (const auto& e : m.electrodes) EXPECT_NEAR(e.x * e.x + e.y * e.y + e.z * e.z, 1.0, 1e-9) << e.name;
  EXPECT_EQ(load_montage("standard_1010").electrodes.size(), m.electrodes.size());
}

TEST(Montage, CsvAndUnknown) {
  const auto path = std::filesystem::temp_directory_path() / "latalign_montage.csv";
  std::ofstream(path) << "name,x,y,z\nA1,0.1,0.2,0.3\nB2,-1,0,0\n";
  const Montage m = load_montage(path.string());
  ASSERT_EQ(m.electrodes.size(), 2u);
  EXPECT_DOUBLE_EQ(m.find("A1")->y, 0.2);
  std::filesystem::remove(path);
  EXPECT_ERROR_CODE(load_montage("biosemi_1020"), ErrorCode::UnknownMontage);
}

TEST(Topography, SingleNonzeroWeight) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 4);
  w(1, 2) = -0.7;
  const std::vector<std::string> ch{"Fpz", "F7", "F8", "Cz"};
  const std::vector<Eigen::MatrixXd> models{w};
  const Topography t = topography(models, ch, standard_1010());
  EXPECT_EQ(t.ranking.front(), 2u);
  EXPECT_TRUE(std::isinf(relevance_ratio(t, {"F8"})));
  EXPECT_NEAR(t.relevance[2], 0.7 / 3.0, 1e-12);
  ASSERT_NE(t.positions[2], nullptr);
}

TEST(Topography, SignInvarianceAndIdempotentAveraging) {
  Eigen::MatrixXd w(4, 5);
  Rng rng(3);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  const std::vector<std::string> ch{"C3", "Cz", "C4", "P3", "P4"};
  const Montage m = standard_1010();
  const std::vector<Eigen::MatrixXd> one{w}, two{w, w}, flipped{-w};
  const Topography a = topography(one, ch, m), b = topography(two, ch, m), c = topography(flipped, ch, m);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(a.relevance[i], b.relevance[i], 1e-15);
    EXPECT_NEAR(a.relevance[i], c.relevance[i], 1e-15);
  }
  EXPECT_EQ(a.ranking, b.ranking);
  const nlohmann::json j = to_json(a, m.name);
  EXPECT_EQ(j["electrodes"].size(), 5u);
}

TEST(Mds, ReproducesPlanarPoints) {
  Eigen::MatrixXd p(12, 2);
  Rng rng(1);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.normal(0.0, 3.0);
  p = p.rowwise() - p.colwise().mean();
  const MdsResult r = classical_mds(p, 2);
  EXPECT_LT(procrustes_error(p, r.points), 1e-6);

  // Embedded in 5-D by a random rotation: same answer.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(12, 5);
  q.leftCols(2) = p;
  Eigen::MatrixXd rnd(5, 5);
  for (Eigen::Index i = 0; i < rnd.size(); ++i) rnd.data()[i] = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(rnd);
  const Eigen::MatrixXd rot = qr.householderQ();
  const MdsResult r5 = classical_mds(q * rot, 2);
  EXPECT_LT(procrustes_error(p, r5.points), 1e-6);
  EXPECT_NEAR(r5.eigenvalues[2], 0.0, 1e-8);
}

TEST(Mds, DegenerateSpectrum) {
  Eigen::MatrixXd collinear(5, 3);
  for (int i = 0; i < 5; ++i) collinear.row(i) << i, 2.0 * i, -i;
  EXPECT_ERROR_CODE(classical_mds(collinear, 2), ErrorCode::DegenerateSpectrum);
}

TEST(Ellipse, IsotropicGaussianRadii) {
  Eigen::MatrixXd p(10000, 2);
  Rng rng(2);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.normal();
  const Ellipse e = confidence_ellipse(p);
  const double r = std::sqrt(kChi2Quantile95Df2);
  EXPECT_NEAR(e.major_radius, r, 0.1 * r);
  EXPECT_NEAR(e.minor_radius, r, 0.1 * r);
  EXPECT_LT(e.center.norm(), 0.05);
}

TEST(Ellipse, ElongatedAxes) {
  Eigen::MatrixXd p(5000, 2);
  Rng rng(3);
  const double angle = 0.6;
  for (Eigen::Index i = 0; i < 5000; ++i) {
    const double u = rng.normal(0.0, 3.0), v = rng.normal(0.0, 1.0);
    p(i, 0) = 10.0 + u * std::cos(angle) - v * std::sin(angle);
    p(i, 1) = -4.0 + u * std::sin(angle) + v * std::cos(angle);
  }
  const Ellipse e = confidence_ellipse(p);
  EXPECT_NEAR(e.major_radius / e.minor_radius, 3.0, 0.2);
  const double diff = std::remainder(e.angle_rad - angle, std::numbers::pi);
  EXPECT_LT(std::abs(diff), 0.05);
  EXPECT_NEAR(e.center[0], 10.0, 0.1);
}

TEST(Ellipse, SeparatedClusters) {
  Eigen::MatrixXd a(200, 2), b(200, 2);
  Rng rng(4);
  for (Eigen::Index i = 0; i < 200; ++i) {
    a.row(i) << rng.normal(-5.0, 0.5), rng.normal(0.0, 0.5);
    b.row(i) << rng.normal(5.0, 0.5), rng.normal(0.0, 0.5);
  }
  const Ellipse ea = confidence_ellipse(a), eb = confidence_ellipse(b);
  EXPECT_GT((ea.center - eb.center).norm(), ea.major_radius + eb.major_radius);
}

TEST(Projection, TimeAveragedAndClouds) {
  const Tensor capture = random_tensor({3, 2, 4}, 5);
  const Eigen::MatrixXd f = time_averaged(capture);
  ASSERT_EQ(f.rows(), 3);
  ASSERT_EQ(f.cols(), 2);
  EXPECT_NEAR(f(1, 1), (capture[12] + capture[13] + capture[14] + capture[15]) / 4.0, 1e-12);

  const TrialArchive a = tiny_archive();
  ModelSpec s = ModelSpec::defaults(Architecture::EegNet, 4, 64, 3, 64.0);
  s.alignment_mode = AlignmentMode::Latent;
  const auto m = build_model(s, 2);
  const std::vector<std::size_t> sessions{0, 1, 2};
  const auto clouds = latent_projection(*m, a, sessions, 2, Method::Latent);
  ASSERT_EQ(clouds.size(), 3u);
  for (const auto& c : clouds) {
    EXPECT_EQ(c.points.rows(), 30);
    EXPECT_EQ(c.points.cols(), 2);
    EXPECT_TRUE(std::isfinite(c.ellipse.major_radius));
  }
  EXPECT_EQ(to_json(clouds).size(), 3u);
}

TEST(Erp, SingleTrialEqualsFilteredTrial) {
  TrialArchive a;
  a.rate_hz = 64.0;
  a.channel_names = {"F7", "F8"};
  a.class_names = {"left", "right"};
  ArchiveSession s;
  s.subject = "S01";
  s.session = "s1";
  s.n_trials = 2;
  s.n_channels = 2;
  s.n_times = 128;
  Rng rng(1);
  for (std::size_t i = 0; i < 2 * 2 * 128; ++i) s.data.push_back(float(rng.normal()));
  s.labels = {0, 1};
  a.sessions.push_back(s);
  const ErpAverage erp = erp_grand_average(a, {"F8"}, std::make_pair(1.0, 8.0));
  std::vector<double> trial(128);
  for (std::size_t t = 0; t < 128; ++t) trial[t] = s.trial(1)[128 + t];
  const auto filtered = apply_filter(trial, 64.0, FilterSpec::bandpass(1.0, 8.0));
  ASSERT_EQ(erp.traces.size(), 2u);
  for (std::size_t t = 0; t < 128; ++t) EXPECT_NEAR(erp.traces[1][0][t], filtered[t], 1e-9);
  EXPECT_NEAR(erp.times_s[64], 1.0, 1e-12);
  EXPECT_ERROR_CODE(erp_grand_average(a, {"Oz"}, std::nullopt), ErrorCode::UnknownElectrode);
}

TEST(Erp, AntisymmetricArtifactAndNullInput) {
  SyntheticSpec spec;
  spec.n_subjects = 8;
  spec.trials_per_subject = 60;
  spec.n_channels = 8;
  spec.snr = 0.0;
  spec.mixing_perturbation = 0.0;
  spec.gain_min = spec.gain_max = 1.0;
  spec.offset_scale = 0.0;
  spec.trial_s = 2.0;
  spec.artifact.enabled = true;
  spec.seed = 3;
  const TrialArchive a = generate_synthetic(spec);
  const ErpAverage erp = erp_grand_average(a, {"F7", "F8", "Cz"}, std::nullopt);
  const std::size_t n = 8 * 20;
  const double noise = 3.0 / std::sqrt(double(n));
  for (std::size_t cls = 0; cls < 2; ++cls) {
    double peak = 0.0;
    for (std::size_t t = 0; t < erp.times_s.size(); ++t) {
      const double f7 = erp.traces[cls][0][t], f8 = erp.traces[cls][1][t];
      EXPECT_LT(std::abs(f7 + f8), 2.0 * noise);
      peak = std::max(peak, std::abs(f7));
      // No class signal and no artifact on Cz.
      EXPECT_LT(std::abs(erp.traces[cls][2][t]), noise);
    }
    EXPECT_GT(peak, 1.0);
  }
  EXPECT_EQ(erp.subject_counts, (std::vector<std::size_t>{8, 8, 8}));
  EXPECT_EQ(to_json(erp)["classes"].size(), 3u);
}

TEST(Sweep, PlainModelIsFlat) {
  SyntheticSpec spec;
  spec.n_subjects = 2;
  spec.trials_per_subject = 30;
  spec.n_channels = 4;
  spec.seed = 8;
  const TrialArchive a = generate_synthetic(spec);
  ModelSpec s = ModelSpec::defaults(Architecture::EegNet, 4, 64, 3, 64.0);
  const auto m = build_model(s, 3);
  ForwardOptions train;
  train.training = true;
  m->forward(session_batch(a, 0).signals, train);
  SweepOptions opt;
  opt.n = 6;
  opt.repetitions = 2;
  opt.method = Method::Baseline;
  const std::vector<std::size_t> sessions{0, 1};
  const CompositionGrid g = imbalance_sweep(*m, a, sessions, opt);
  ASSERT_EQ(g.size(), composition_count(6, 3));
  for (double acc : g.accuracy) EXPECT_DOUBLE_EQ(acc, g.accuracy.front());

  opt.method = Method::Latent;
  opt.n = 11;
  EXPECT_ERROR_CODE(imbalance_sweep(*m, a, sessions, opt), ErrorCode::InsufficientTrials);
}
