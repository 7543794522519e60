#include "latalign/eval/composition.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

const std::vector<double> kThirds{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

CompositionGrid random_grid(std::uint64_t seed) {
  CompositionGrid g = make_grid(21, 3, kThirds);
  Rng rng(seed);
  for (double& a : g.accuracy) a = rng.uniform(0.3, 0.9);
  return g;
}

}  // namespace

TEST(Composition, GridSize) {
  EXPECT_EQ(composition_count(21, 3), 253u);
  EXPECT_EQ(enumerate_compositions(21, 3).size(), 253u);
  EXPECT_EQ(composition_count(12, 3), 91u);
  const auto c = enumerate_compositions(2, 3);
  ASSERT_EQ(c.size(), 6u);
  EXPECT_EQ(c.front(), (Composition{2, 0, 0}));
  EXPECT_EQ(c.back(), (Composition{0, 0, 2}));
}

TEST(Composition, WeightsSumToOne) {
  for (std::size_t n : {1u, 5u, 21u, 40u, 64u}) {
    const CompositionGrid g = make_grid(n, 3, kThirds);
    double sum = 0.0;
    for (double w : g.weights) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12) << n;
  }
  const std::vector<double> skew{0.6, 0.3, 0.1};
  const CompositionGrid g = make_grid(21, 3, skew);
  double sum = 0.0;
  for (double w : g.weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Composition, CornerWeight) {
  const CompositionGrid g = make_grid(21, 3, kThirds);
  const double w = g.weights[g.index_of({21, 0, 0})];
  EXPECT_NEAR(w, std::pow(1.0 / 3.0, 21), 1e-24);
  EXPECT_NEAR(w, 9.56e-11, 0.01e-11);
}

TEST(Composition, ExactCoefficients) {
  const std::vector<std::size_t> c{7, 7, 7};
  // 21! / (7!)^3
  EXPECT_EQ(multinomial_coefficient(c), 399072960.0);
  const std::vector<std::size_t> big{30, 20, 14};
  // 64! / (30! 20! 14!) = C(64,30) * C(34,20)
  EXPECT_NEAR(multinomial_coefficient(big) / (1.620288010530347e18 * 1391975640.0), 1.0, 1e-12);
  const std::vector<std::size_t> huge{40, 40, 40};
  const double log_expected = std::lgamma(121.0) - 3.0 * std::lgamma(41.0);
  EXPECT_NEAR(std::log(multinomial_coefficient(huge)), log_expected, 1e-9);
}

TEST(WeightedAccuracy, ConstantGrid) {
  CompositionGrid g = make_grid(21, 3, kThirds);
  std::fill(g.accuracy.begin(), g.accuracy.end(), 0.5);
  EXPECT_NEAR(weighted_accuracy(g, kThirds), 0.5, 1e-12);
}

TEST(WeightedAccuracy, MatchesMonteCarlo) {
  const CompositionGrid g = random_grid(8);
  const double wa = weighted_accuracy(g, kThirds);
  Rng rng(99);
  const long draws = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (long d = 0; d < draws; ++d) {
    Composition c(3, 0);
    for (int t = 0; t < 21; ++t) ++c[rng.index(3)];
    const double a = g.accuracy[g.index_of(c)];
    sum += a;
    sum_sq += a * a;
  }
  const double mean = sum / double(draws);
  const double se = std::sqrt((sum_sq / double(draws) - mean * mean) / double(draws));
  EXPECT_LT(std::abs(wa - mean), 3.0 * se) << "wa " << wa << " mc " << mean << " se " << se;
}

TEST(WeightedAccuracy, Monotone) {
  const CompositionGrid base = random_grid(3);
  const double wa = weighted_accuracy(base, kThirds);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    CompositionGrid g = base;
    g.accuracy[rng.index(g.size())] += rng.uniform(0.0, 0.1);
    EXPECT_GE(weighted_accuracy(g, kThirds), wa);
  }
}

TEST(WeightedAccuracy, IncompleteGrid) {
  CompositionGrid g = random_grid(1);
  g.accuracy[17] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ERROR_CODE(weighted_accuracy(g, kThirds), ErrorCode::IncompleteGrid);
}

TEST(Composition, GridCsv) {
  const CompositionGrid g = random_grid(2);
  const auto path = std::filesystem::temp_directory_path() / "latalign_grid.csv";
  write_grid_csv(path, g);
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  EXPECT_NE(line.find("accuracy"), std::string::npos);
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 253u);
  std::filesystem::remove(path);
}
