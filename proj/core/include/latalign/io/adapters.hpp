#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "latalign/io/trial_archive.hpp"

namespace latalign {

/// "Fcz." -> "FCz", "Fp1." -> "Fp1", "Iz.." -> "Iz".
std::string normalize_channel_name(std::string_view raw);

enum class MotorParadigm { Imagery, Execution };

struct PhysionetMiOptions {
  MotorParadigm paradigm = MotorParadigm::Imagery;
  /// Restrict to these subject numbers (empty: every retained subject).
  std::vector<int> subjects;
  double t_start_s = 0.0;
  double t_end_s = 4.1;
};

/// The 103 subject numbers kept after dropping recordings with inconsistent
/// trial counts or sampling rates.
std::vector<int> physionet_mi_subjects();

/// Reads <root>/S###/S###R##.edf; classes left fist, right fist, both feet.
/// Bandpass 4-40 Hz (order 3), notch 60 Hz, common average reference.
TrialArchive import_physionet_mi(const std::filesystem::path& root,
                                 const PhysionetMiOptions& options = {});

enum class SleepStage { Wake = 0, N1 = 1, N2 = 2, N3 = 3, Rem = 4 };

/// Maps a hypnogram annotation to a class label; -1 for segments that are
/// skipped ("?" and movement time). Throws UnknownStageCode otherwise.
int sleep_stage_label(std::string_view annotation);

struct SleepOptions {
  std::vector<std::string> channels = {"EEG Fpz-Cz", "EEG Pz-Oz"};
  double epoch_s = 30.0;
  double wake_margin_s = 30.0 * 60.0;
};

/// Pairs *PSG.edf with *Hypnogram.edf by their six-character recording prefix.
TrialArchive import_sleep(const std::filesystem::path& root, const SleepOptions& options = {});

/// Electrodes dropped from the 62-channel OpenBMI montage, leaving 48.
const std::vector<std::string>& openbmi_dropped_electrodes();

/// Takes a pre-converted archive, drops the non-standard electrodes, resamples
/// to 100 Hz, bandpasses 0.5-45 Hz and applies the common average reference.
TrialArchive import_openbmi(const std::filesystem::path& archive_dir);
TrialArchive prepare_openbmi(const TrialArchive& raw);

}  // namespace latalign
