#include "latalign/signal/epoch.hpp"

#include <cmath>

#include "latalign/error.hpp"
#include "latalign/log.hpp"

namespace latalign {

std::size_t EpochSpec::sample_count(double rate_hz) const {
  require(t_end_s > t_start_s, ErrorCode::InvalidArgument, "epoch window end must follow start");
  const auto n = std::llround((t_end_s - t_start_s) * rate_hz);
  require(n > 0, ErrorCode::InvalidArgument, "epoch window has no samples");
  return static_cast<std::size_t>(n);
}

EpochResult epoch(const SignalMatrix& continuous, std::span<const Event> events,
                  const EpochSpec& spec, double rate_hz) {
  const std::size_t len = spec.sample_count(rate_hz);
  const auto offset = std::llround(spec.t_start_s * rate_hz);
  const auto total = static_cast<long long>(continuous.cols());
  const auto c = static_cast<std::size_t>(continuous.rows());

  std::vector<std::size_t> starts;
  std::vector<int> labels;
  std::vector<std::size_t> onsets;
  std::size_t mapped = 0;
  std::size_t dropped = 0;
  for (const Event& e : events) {
    const auto it = spec.event_codes.find(e.code);
    if (it == spec.event_codes.end()) continue;
    ++mapped;
    const long long start = static_cast<long long>(e.sample) + offset;
    if (start < 0 || start + static_cast<long long>(len) > total) {
      ++dropped;
      continue;
    }
    starts.push_back(static_cast<std::size_t>(start));
    labels.push_back(it->second);
    onsets.push_back(e.sample);
  }
  require(mapped > 0, ErrorCode::NoEvents, "no events with a mapped code");
  if (dropped > 0)
    log_warning("epoch: dropped " + std::to_string(dropped) + " out-of-bounds event(s)");

  EpochResult result;
  result.dropped = dropped;
  result.onsets = std::move(onsets);
  result.trials.signals = Tensor({starts.size(), c, len});
  for (std::size_t k = 0; k < starts.size(); ++k) {
    double* dst = result.trials.signals.trial(k).data();
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t s = 0; s < len; ++s)
        dst[ch * len + s] = continuous(static_cast<Eigen::Index>(ch),
                                       static_cast<Eigen::Index>(starts[k] + s));
  }
  result.trials.labels = std::move(labels);
  result.trials.subjects.assign(starts.size(), "");
  result.trials.sessions.assign(starts.size(), "");
  return result;
}

Tensor slice_window(const Tensor& trials, double rate_hz, double t0_s, double t1_s) {
  require(trials.rank() == 3, ErrorCode::ShapeMismatch, "trials must be [n x c x t]");
  require(t1_s > t0_s && t0_s >= 0.0, ErrorCode::InvalidArgument, "invalid window");
  const auto s0 = static_cast<std::size_t>(std::llround(t0_s * rate_hz));
  const auto s1 = static_cast<std::size_t>(std::llround(t1_s * rate_hz));
  const std::size_t t = trials.dim(2);
  require(s1 <= t && s1 > s0, ErrorCode::ShapeMismatch,
          "window [" + std::to_string(t0_s) + ", " + std::to_string(t1_s) +
              ") s exceeds the trial length");
  const std::size_t n = trials.dim(0), c = trials.dim(1), len = s1 - s0;
  Tensor out({n, c, len});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t s = 0; s < len; ++s)
        out[(i * c + ch) * len + s] = trials[(i * c + ch) * t + s0 + s];
  return out;
}

}  // namespace latalign
