#include "latalign/signal/filter.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;

namespace {

std::vector<double> sine(double freq, double rate, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * double(i) / rate);
  return x;
}

// Amplitude of a sinusoid at a known frequency by least-squares projection.
double amplitude_at(const std::vector<double>& x, double freq, double rate, std::size_t from, std::size_t to) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    const double ph = 2.0 * std::numbers::pi * freq * double(i) / rate;
    s += x[i] * std::sin(ph);
    c += x[i] * std::cos(ph);
  }
  const double n = double(to - from);
  return 2.0 * std::hypot(s, c) / n;
}

std::vector<double> mixed_input(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(0.3 * double(i)) + 0.5 * std::cos(1.7 * double(i)) + 0.01 * double(i);
  return x;
}

}  // namespace

// Reference values below were produced with scipy.signal (butter/iirnotch, sosfreqz/freqz,
// sosfiltfilt/filtfilt with default padding).
TEST(Filter, ButterworthMagnitudeMatchesReference) {
  const auto sos = design_butterworth_bandpass(3, 4.0, 40.0, 160.0);
  ASSERT_EQ(sos.size(), 3u);
  const double freqs[] = {1, 4, 10, 25, 40, 60, 79};
  const double expected[] = {0.012327418937695553, 0.7071067811865478, 0.9999525761033408, 0.9972529715064262,
                             0.7071067811865476,   0.05779098525033557, 5.922396257003996e-06};
  for (int i = 0; i < 7; ++i)
    EXPECT_NEAR(magnitude_response(sos, freqs[i], 160.0), expected[i], 1e-9 + 1e-7 * expected[i]) << freqs[i];
}

TEST(Filter, SleepBandMagnitudeMatchesReference) {
  const auto sos = design_butterworth_bandpass(3, 0.1, 45.0, 100.0);
  const double freqs[] = {0.05, 1, 10, 45, 49};
  const double expected[] = {0.1238971341902698, 0.9999996315879427, 0.9999999973275416, 0.707106781186546,
                             0.007800180720636345};
  for (int i = 0; i < 5; ++i)
    EXPECT_NEAR(magnitude_response(sos, freqs[i], 100.0), expected[i], 1e-7 * std::max(1.0, expected[i])) << freqs[i];
}

TEST(Filter, NotchCoefficientsMatchReference) {
  const auto sos = design_notch(60.0, 30.0, 160.0);
  ASSERT_EQ(sos.size(), 1u);
  const Biquad& s = sos[0];
  EXPECT_NEAR(s[0], 0.9621952458291035, 1e-12);
  EXPECT_NEAR(s[1], 1.3607495663024323, 1e-12);
  EXPECT_NEAR(s[2], 0.9621952458291035, 1e-12);
  EXPECT_NEAR(s[3], 1.0, 1e-15);
  EXPECT_NEAR(s[4], 1.3607495663024323, 1e-12);
  EXPECT_NEAR(s[5], 0.9243904916582071, 1e-12);
  const double freqs[] = {10, 55, 65};
  const double expected[] = {0.9999575099311457, 0.9775420767561833, 0.9849430384449832};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(magnitude_response(sos, freqs[i], 160.0), expected[i], 1e-9);
  EXPECT_LT(magnitude_response(sos, 60.0, 160.0), 1e-12);
}

TEST(Filter, ZeroPhaseBandpassMatchesReference) {
  const auto y = apply_filter(mixed_input(200), 160.0, FilterSpec::bandpass(4.0, 40.0));
  ASSERT_EQ(y.size(), 200u);
  const std::size_t idx[] = {0, 1, 50, 100, 199};
  const double expected[] = {0.03385051249224033, -0.3126228077924452, 0.5006150968689765, -0.8475227423595773,
                             0.10731460439721507};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(y[idx[i]], expected[i], 1e-8) << idx[i];
}

TEST(Filter, ZeroPhaseNotchMatchesReference) {
  const auto y = apply_filter(mixed_input(200), 160.0, FilterSpec::notch(60.0));
  const std::size_t idx[] = {0, 50, 199};
  const double expected[] = {0.5004596279950815, 0.6613551190762349, 2.241348990801747};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[idx[i]], expected[i], 1e-8) << idx[i];
}

TEST(Filter, BandInteriorSinePreserved) {
  const double rate = 160.0;
  const auto x = sine(10.0, rate, 1600);
  const auto y = apply_filter(x, rate, FilterSpec::bandpass(4.0, 40.0));
  const double amp = amplitude_at(y, 10.0, rate, 160, 1440);
  EXPECT_NEAR(amp, 1.0, 0.05);
  // No phase delay: the filtered signal lines up with the input.
  double err = 0.0;
  for (std::size_t i = 160; i < 1440; ++i) err = std::max(err, std::abs(y[i] - x[i]));
  EXPECT_LT(err, 0.01);
}

TEST(Filter, NotchRemovesLineNoise) {
  const double rate = 160.0;
  const auto y = apply_filter(sine(60.0, rate, 1600), rate, FilterSpec::notch(60.0));
  EXPECT_LT(amplitude_at(y, 60.0, rate, 160, 1440), 0.1);
}

TEST(Filter, BandpassRemovesDc) {
  std::vector<double> x(1600, 5.0);
  const auto y = apply_filter(x, 160.0, FilterSpec::bandpass(4.0, 40.0));
  double mean_abs = 0.0;
  for (double v : y) mean_abs += std::abs(v);
  EXPECT_LT(mean_abs / double(y.size()), 5e-3);
}

TEST(Filter, Linearity) {
  const auto a = random_tensor({1, 1, 500}, 1);
  const auto b = random_tensor({1, 1, 500}, 2);
  std::vector<double> xa(a.values().begin(), a.values().end()), xb(b.values().begin(), b.values().end()), mix(500);
  for (std::size_t i = 0; i < 500; ++i) mix[i] = 2.5 * xa[i] - 1.5 * xb[i];
  for (const FilterSpec& spec : {FilterSpec::bandpass(4.0, 40.0), FilterSpec::notch(60.0)}) {
    const auto fa = apply_filter(xa, 160.0, spec);
    const auto fb = apply_filter(xb, 160.0, spec);
    const auto fm = apply_filter(mix, 160.0, spec);
    for (std::size_t i = 0; i < 500; ++i) EXPECT_NEAR(fm[i], 2.5 * fa[i] - 1.5 * fb[i], 1e-8);
  }
}

TEST(Filter, Deterministic) {
  SignalMatrix x(3, 400);
  Rng rng(3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const SignalMatrix a = apply_filter(x, 160.0, FilterSpec::bandpass(4.0, 40.0));
  const SignalMatrix b = apply_filter(x, 160.0, FilterSpec::bandpass(4.0, 40.0));
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * std::size_t(a.size())));
}

TEST(Filter, Errors) {
  EXPECT_ERROR_CODE(apply_filter(std::vector<double>(20, 0.0), 160.0, FilterSpec::bandpass(4.0, 40.0)),
                    ErrorCode::TooShort);
  EXPECT_ERROR_CODE(design_butterworth_bandpass(3, 40.0, 4.0, 160.0), ErrorCode::InvalidBand);
  EXPECT_ERROR_CODE(design_butterworth_bandpass(3, 4.0, 90.0, 160.0), ErrorCode::InvalidBand);
  EXPECT_ERROR_CODE(design_notch(90.0, 30.0, 160.0), ErrorCode::InvalidBand);
}
