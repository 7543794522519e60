#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latalign/io/trial_archive.hpp"

namespace latalign {

/// Class-locked frontal transient, as left by saccades toward a lateral cue.
struct ArtifactSpec {
  bool enabled = false;
  double start_s = 0.0;
  double end_s = 1.0;
  /// Peak amplitude in units of the background standard deviation.
  double amplitude = 3.0;
  std::vector<std::string> channels = {"F7", "F8", "Fpz"};
};

struct SyntheticSpec {
  std::size_t n_subjects = 10;
  std::size_t trials_per_subject = 60;
  std::size_t n_channels = 8;
  std::size_t n_classes = 3;
  double rate_hz = 64.0;
  double trial_s = 1.0;

  /// Scale of the random skew generator of the per-subject rotation.
  double mixing_perturbation = 0.3;
  double gain_min = 0.5;
  double gain_max = 2.0;
  /// Std of the per-subject channel offsets, in background units.
  double offset_scale = 1.0;

  /// Class signal RMS over background RMS. Zero gives class-blind data.
  double snr = 1.0;
  double class_frequency_hz = 6.0;
  /// Class k oscillates at class_frequency_hz * (1 + step * k); 0 leaves only the spatial pattern.
  double class_frequency_step = 0.25;
  /// Uniform per-trial phase jitter half-width in radians.
  double phase_jitter = 0.5;
  /// Channels the class patterns may load on; empty means all.
  std::vector<std::size_t> class_channels;

  ArtifactSpec artifact;
  /// Per-subject class proportions; empty means balanced.
  std::vector<double> class_proportions;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

/// Channel names used for synthetic montages (10-10 labels, frontal first).
std::vector<std::string> synthetic_channel_names(std::size_t n_channels);

/// Pure function of the spec: identical specs give bit-identical archives.
TrialArchive generate_synthetic(const SyntheticSpec& spec);

}  // namespace latalign
