#include "latalign/signal/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "latalign/error.hpp"

namespace latalign {

namespace {

using cplx = std::complex<double>;

void check_rate(double rate_hz) {
  require(rate_hz > 0.0 && std::isfinite(rate_hz), ErrorCode::InvalidBand,
          "sampling rate must be positive");
}

}  // namespace

FilterSpec FilterSpec::bandpass(double low_hz, double high_hz, int order) {
  FilterSpec s;
  s.kind = FilterKind::Bandpass;
  s.order = order;
  s.low_hz = low_hz;
  s.high_hz = high_hz;
  return s;
}

FilterSpec FilterSpec::notch(double center_hz, double quality) {
  FilterSpec s;
  s.kind = FilterKind::Notch;
  s.order = 2;
  s.center_hz = center_hz;
  s.quality = quality;
  return s;
}

std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                                double rate_hz) {
  check_rate(rate_hz);
  const double nyquist = rate_hz / 2.0;
  require(order >= 1, ErrorCode::InvalidBand, "filter order must be >= 1");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist, ErrorCode::InvalidBand,
          "bandpass needs 0 < low < high < nyquist (" + std::to_string(low_hz) + ", " +
              std::to_string(high_hz) + ", " + std::to_string(nyquist) + ")");

  const double fs2 = 2.0 * rate_hz;
  const double wl = fs2 * std::tan(std::numbers::pi * low_hz / rate_hz);
  const double wh = fs2 * std::tan(std::numbers::pi * high_hz / rate_hz);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  // Analog prototype poles on the left half of the unit circle.
  std::vector<cplx> analog;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const cplx p = std::polar(1.0, theta);
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    analog.push_back(half + root);
    analog.push_back(half - root);
  }

  // Bilinear transform. The bandpass has `order` zeros at s = 0 (-> z = 1) and
  // `order` at infinity (-> z = -1).
  cplx gain = std::pow(bw, order) * std::pow(fs2, order);
  std::vector<cplx> poles;
  for (const cplx& p : analog) {
    gain /= (fs2 - p);
    poles.push_back((fs2 + p) / (fs2 - p));
  }

  // Pair each pole with positive imaginary part with its conjugate; leftover
  // real poles are paired with each other.
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) < 1e-12) reals.push_back(p.real());
    else if (p.imag() > 0.0) upper.push_back(p);
  }
  std::vector<std::array<double, 2>> denominators;
  for (const cplx& p : upper) denominators.push_back({-2.0 * p.real(), std::norm(p)});
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    denominators.push_back({-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  require(denominators.size() == static_cast<std::size_t>(order), ErrorCode::InvalidBand,
          "unexpected pole structure in bandpass design");

  std::vector<Biquad> sections;
  for (std::size_t s = 0; s < denominators.size(); ++s) {
    const double g = s == 0 ? gain.real() : 1.0;
    sections.push_back({g, 0.0, -g, 1.0, denominators[s][0], denominators[s][1]});
  }
  return sections;
}

std::vector<Biquad> design_notch(double center_hz, double quality, double rate_hz) {
  check_rate(rate_hz);
  require(center_hz > 0.0 && center_hz < rate_hz / 2.0, ErrorCode::InvalidBand,
          "notch center must lie in (0, nyquist)");
  require(quality > 0.0, ErrorCode::InvalidBand, "notch quality must be positive");
  const double w0 = 2.0 * std::numbers::pi * center_hz / rate_hz;
  const double bw = w0 / quality;
  const double beta = std::tan(bw / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  return {{gain, -2.0 * gain * c, gain, 1.0, -2.0 * gain * c, 2.0 * gain - 1.0}};
}

std::vector<Biquad> design_filter(const FilterSpec& spec, double rate_hz) {
  if (spec.kind == FilterKind::Notch) return design_notch(spec.center_hz, spec.quality, rate_hz);
  return design_butterworth_bandpass(spec.order, spec.low_hz, spec.high_hz, rate_hz);
}

std::vector<std::array<double, 2>> step_initial_state(std::span<const Biquad> sections) {
  std::vector<std::array<double, 2>> zi;
  double input = 1.0;
  for (const Biquad& s : sections) {
    const double dc = (s[0] + s[1] + s[2]) / (1.0 + s[4] + s[5]);
    const double y = dc * input;
    const double z2 = s[2] * input - s[5] * y;
    const double z1 = s[1] * input - s[4] * y + z2;
    zi.push_back({z1, z2});
    input = y;
  }
  return zi;
}

void sos_filter_inplace(std::span<const Biquad> sections, std::span<double> signal,
                        std::vector<std::array<double, 2>>& state) {
  if (state.size() != sections.size()) state.assign(sections.size(), {0.0, 0.0});
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const Biquad& s = sections[k];
    double z1 = state[k][0];
    double z2 = state[k][1];
    for (double& v : signal) {
      const double x = v;
      const double y = s[0] * x + z1;
      z1 = s[1] * x - s[4] * y + z2;
      z2 = s[2] * x - s[5] * y;
      v = y;
    }
    state[k] = {z1, z2};
  }
}

double magnitude_response(std::span<const Biquad> sections, double freq_hz, double rate_hz) {
  const cplx z = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_hz);
  cplx h = 1.0;
  for (const Biquad& s : sections)
    h *= (s[0] + s[1] * z + s[2] * z * z) / (s[3] + s[4] * z + s[5] * z * z);
  return std::abs(h);
}

std::size_t zero_phase_padding(std::span<const Biquad> sections) {
  std::size_t zeros_b = 0, zeros_a = 0;
  for (const Biquad& s : sections) {
    zeros_b += s[2] == 0.0;
    zeros_a += s[5] == 0.0;
  }
  return 3 * (2 * sections.size() + 1 - std::min(zeros_b, zeros_a));
}

namespace {

void filter_row(std::span<const Biquad> sections,
                const std::vector<std::array<double, 2>>& zi, std::span<double> row,
                bool zero_phase, std::size_t pad) {
  const std::size_t n = row.size();
  auto scaled = [&](double x0) {
    auto st = zi;
    for (auto& z : st) {
      z[0] *= x0;
      z[1] *= x0;
    }
    return st;
  };
  if (!zero_phase) {
    auto st = scaled(row[0]);
    sos_filter_inplace(sections, row, st);
    return;
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * row[0] - row[pad - i];
    ext[pad + n + i] = 2.0 * row[n - 1] - row[n - 2 - i];
  }
  std::copy(row.begin(), row.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  auto st = scaled(ext.front());
  sos_filter_inplace(sections, ext, st);
  std::reverse(ext.begin(), ext.end());
  st = scaled(ext.front());
  sos_filter_inplace(sections, ext, st);
  std::reverse(ext.begin(), ext.end());
  std::copy_n(ext.begin() + static_cast<std::ptrdiff_t>(pad), n, row.begin());
}

}  // namespace

SignalMatrix apply_filter(const SignalMatrix& signal, double rate_hz, const FilterSpec& spec) {
  const auto sections = design_filter(spec, rate_hz);
  const std::size_t pad = zero_phase_padding(sections);
  const std::size_t t = static_cast<std::size_t>(signal.cols());
  const std::size_t min_len = std::max<std::size_t>(pad, 12 * static_cast<std::size_t>(spec.order));
  require(t > min_len, ErrorCode::TooShort,
          "signal of " + std::to_string(t) + " samples is too short for this filter (needs > " +
              std::to_string(min_len) + ")");
  require(signal.allFinite(), ErrorCode::NonFiniteInput, "signal contains NaN or Inf");
  const auto zi = step_initial_state(sections);
  SignalMatrix out = signal;
  for (Eigen::Index c = 0; c < out.rows(); ++c)
    filter_row(sections, zi, {out.row(c).data(), t}, spec.zero_phase, pad);
  return out;
}

std::vector<double> apply_filter(std::span<const double> signal, double rate_hz,
                                 const FilterSpec& spec) {
  SignalMatrix m(1, static_cast<Eigen::Index>(signal.size()));
  std::copy(signal.begin(), signal.end(), m.data());
  const SignalMatrix out = apply_filter(m, rate_hz, spec);
  return {out.data(), out.data() + out.size()};
}

}  // namespace latalign
