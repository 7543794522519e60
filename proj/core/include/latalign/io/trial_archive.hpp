#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latalign/trial_batch.hpp"

namespace latalign {

/// One recording session: trials stored as float32 [n x c x t] plus labels.
struct ArchiveSession {
  std::string subject;
  std::string session;
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_times = 0;
  std::vector<float> data;
  std::vector<int> labels;

  std::span<const float> trial(std::size_t i) const {
    const std::size_t n = n_channels * n_times;
    return {data.data() + i * n, n};
  }
};

/// Canonical on-disk intermediate for every dataset adapter: a directory with
/// metadata.json and one raw little-endian float32 file per session.
struct TrialArchive {
  double rate_hz = 0.0;
  std::vector<std::string> channel_names;
  std::vector<std::string> class_names;
  std::vector<ArchiveSession> sessions;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t n_classes() const noexcept { return class_names.size(); }
  std::size_t total_trials() const noexcept;
  std::vector<std::string> subjects() const;
  /// Indices of sessions belonging to any of the given subjects.
  std::vector<std::size_t> sessions_of(std::span<const std::string> subjects) const;
  void validate() const;
};

/// Reference to trial `trial` of session `session` within an archive.
struct TrialRef {
  std::size_t session = 0;
  std::size_t trial = 0;

  friend bool operator==(const TrialRef&, const TrialRef&) = default;
};

inline constexpr const char* kArchiveMetadataFile = "metadata.json";
inline constexpr int kArchiveFormatVersion = 1;

void write_trial_archive(const TrialArchive& archive, const std::filesystem::path& dir);
TrialArchive read_trial_archive(const std::filesystem::path& dir);

TrialBatch session_batch(const TrialArchive& archive, std::size_t session);
TrialBatch gather_trials(const TrialArchive& archive, std::span<const TrialRef> refs);
/// All trials of the given sessions, in session order.
TrialBatch gather_sessions(const TrialArchive& archive, std::span<const std::size_t> sessions);

/// Deep copy with every trial cropped to samples [t0, t1) seconds.
TrialArchive crop_archive(const TrialArchive& archive, double t0_s, double t1_s);

}  // namespace latalign
