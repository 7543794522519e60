#pragma once

#include <cstddef>
#include <map>
#include <span>

#include "latalign/signal/signal_matrix.hpp"
#include "latalign/trial_batch.hpp"

namespace latalign {

struct EpochSpec {
  double t_start_s = 0.0;
  double t_end_s = 1.0;
  /// Event code -> class label. Events with unmapped codes are ignored.
  std::map<int, int> event_codes;

  std::size_t sample_count(double rate_hz) const;
};

struct Event {
  std::size_t sample = 0;
  int code = 0;
};

struct EpochResult {
  TrialBatch trials;
  std::vector<std::size_t> onsets;
  std::size_t dropped = 0;
};

/// Cuts fixed-length windows around events. Windows leaving the recording are
/// dropped and counted. Throws NoEvents when no event carries a mapped code.
EpochResult epoch(const SignalMatrix& continuous, std::span<const Event> events,
                  const EpochSpec& spec, double rate_hz);

/// Keeps samples [t0, t1) of every trial, with times relative to the trial start.
Tensor slice_window(const Tensor& trials, double rate_hz, double t0_s, double t1_s);

}  // namespace latalign
