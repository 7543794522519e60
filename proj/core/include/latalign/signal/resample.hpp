#pragma once

#include <cstddef>
#include <vector>

#include "latalign/signal/signal_matrix.hpp"

namespace latalign {

/// Rational resampling factors after reducing from_hz / to_hz.
struct ResampleRatio {
  std::size_t up = 1;
  std::size_t down = 1;
};

ResampleRatio resample_ratio(double from_hz, double to_hz);

/// Kaiser-windowed sinc lowpass for the upsampled rate, gain `up`, cutoff at the
/// lower of the two Nyquist frequencies. Length 2 * half_len + 1.
std::vector<double> design_resample_filter(const ResampleRatio& ratio, std::size_t half_len,
                                           double kaiser_beta = 5.0);

/// Polyphase rational resampling. Output length round(t * to_hz / from_hz).
SignalMatrix resample(const SignalMatrix& signal, double from_hz, double to_hz);

}  // namespace latalign
