#pragma once

#include <array>
#include <span>
#include <vector>

#include "latalign/signal/signal_matrix.hpp"

namespace latalign {

enum class FilterKind { Bandpass, Notch };

struct FilterSpec {
  FilterKind kind = FilterKind::Bandpass;
  int order = 3;
  double low_hz = 0.0;
  double high_hz = 0.0;
  double center_hz = 0.0;
  double quality = 30.0;
  bool zero_phase = true;

  static FilterSpec bandpass(double low_hz, double high_hz, int order = 3);
  static FilterSpec notch(double center_hz, double quality = 30.0);
};

/// Second-order section {b0, b1, b2, a0, a1, a2} with a0 == 1.
using Biquad = std::array<double, 6>;

/// Digital Butterworth bandpass via bilinear transform with prewarping; `order`
/// biquads (the bandpass has 2 * order poles).
std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                                double rate_hz);
std::vector<Biquad> design_notch(double center_hz, double quality, double rate_hz);
std::vector<Biquad> design_filter(const FilterSpec& spec, double rate_hz);

/// Steady-state section states for a unit step input (two per section).
std::vector<std::array<double, 2>> step_initial_state(std::span<const Biquad> sections);

/// Causal cascade filtering in direct form II transposed. `state` is updated in place.
void sos_filter_inplace(std::span<const Biquad> sections, std::span<double> signal,
                        std::vector<std::array<double, 2>>& state);

/// Complex response magnitude at a frequency.
double magnitude_response(std::span<const Biquad> sections, double freq_hz, double rate_hz);

/// Edge padding used by the zero-phase path.
std::size_t zero_phase_padding(std::span<const Biquad> sections);

/// Filters each row. Zero-phase: forward-backward with odd reflective padding
/// and step-response initial states; output length equals input length.
SignalMatrix apply_filter(const SignalMatrix& signal, double rate_hz, const FilterSpec& spec);

/// Single-channel convenience.
std::vector<double> apply_filter(std::span<const double> signal, double rate_hz,
                                 const FilterSpec& spec);

}  // namespace latalign
