#include "latalign/signal/resample.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "latalign/error.hpp"

namespace latalign {

ResampleRatio resample_ratio(double from_hz, double to_hz) {
  require(from_hz > 0.0 && to_hz > 0.0, ErrorCode::InvalidArgument, "rates must be positive");
  // Rates are given in Hz with at most millihertz precision in practice.
  const auto from = static_cast<std::uint64_t>(std::llround(from_hz * 1000.0));
  const auto to = static_cast<std::uint64_t>(std::llround(to_hz * 1000.0));
  require(from > 0 && to > 0, ErrorCode::InvalidArgument, "rates below 1 mHz are not supported");
  const std::uint64_t g = std::gcd(from, to);
  return {static_cast<std::size_t>(to / g), static_cast<std::size_t>(from / g)};
}

std::vector<double> design_resample_filter(const ResampleRatio& ratio, std::size_t half_len,
                                           double kaiser_beta) {
  const double cutoff = 1.0 / static_cast<double>(std::max(ratio.up, ratio.down));
  const std::size_t len = 2 * half_len + 1;
  std::vector<double> h(len);
  const double denom = std::cyl_bessel_i(0.0, kaiser_beta);
  double sum = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half_len);
    const double x = cutoff * m;
    const double sinc = m == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = m / static_cast<double>(half_len);
    const double window = std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    h[k] = cutoff * sinc * window;
    sum += h[k];
  }
  for (double& v : h) v *= static_cast<double>(ratio.up) / sum;
  return h;
}

SignalMatrix resample(const SignalMatrix& signal, double from_hz, double to_hz) {
  const ResampleRatio ratio = resample_ratio(from_hz, to_hz);
  if (ratio.up == ratio.down) return signal;
  const auto t = static_cast<std::size_t>(signal.cols());
  const auto t_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(t) * static_cast<double>(ratio.up) /
                   static_cast<double>(ratio.down)));
  const std::size_t half_len = 10 * std::max(ratio.up, ratio.down);
  const std::vector<double> h = design_resample_filter(ratio, half_len);
  const auto L = static_cast<std::ptrdiff_t>(ratio.up);
  const auto M = static_cast<std::ptrdiff_t>(ratio.down);
  const auto H = static_cast<std::ptrdiff_t>(half_len);

  SignalMatrix out(signal.rows(), static_cast<Eigen::Index>(t_out));
  for (Eigen::Index c = 0; c < signal.rows(); ++c) {
    const double* x = signal.row(c).data();
    for (std::size_t m = 0; m < t_out; ++m) {
      // Output sample m sits at upsampled index u = m * M; input n sits at n * L.
      const std::ptrdiff_t u = static_cast<std::ptrdiff_t>(m) * M;
      std::ptrdiff_t n_lo = (u - H + L - 1) / L;
      if (u - H < 0) n_lo = -((H - u) / L);
      n_lo = std::max<std::ptrdiff_t>(n_lo, 0);
      const std::ptrdiff_t n_hi =
          std::min<std::ptrdiff_t>((u + H) / L, static_cast<std::ptrdiff_t>(t) - 1);
      double acc = 0.0;
      for (std::ptrdiff_t n = n_lo; n <= n_hi; ++n) acc += x[n] * h[static_cast<std::size_t>(H + u - n * L)];
      out(c, static_cast<Eigen::Index>(m)) = acc;
    }
  }
  return out;
}

}  // namespace latalign
