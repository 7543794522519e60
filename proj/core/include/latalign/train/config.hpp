#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "latalign/io/trial_archive.hpp"
#include "latalign/model/model.hpp"
#include "latalign/train/batching.hpp"
#include "latalign/train/trainer.hpp"

namespace latalign {

/// One training run. JSON layout:
///   { "archive": path, "output_dir": path, "method": "latent",
///     "window_s": [t0, t1],                     (optional crop)
///     "model": { "architecture": "eegnet", ...overrides },
///     "plan": {...}, "train": {...}, "fold": k (optional) }
struct ExperimentConfig {
  std::string archive;
  std::string output_dir;
  Method method = Method::Baseline;
  std::optional<std::pair<double, double>> window_s;
  std::string architecture = "eegnet";
  nlohmann::json model_overrides = nlohmann::json::object();
  BatchPlan plan;
  TrainConfig train;
  std::optional<std::size_t> fold;
};

/// Validates the whole document and reports every offending key in one ConfigInvalid error.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Model spec for an archive: geometry from the data, the rest from defaults and overrides.
ModelSpec resolve_model_spec(const ExperimentConfig& config, const TrialArchive& archive);

/// Reads a JSON document from disk (Io on failure, ConfigInvalid on syntax errors).
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace latalign
