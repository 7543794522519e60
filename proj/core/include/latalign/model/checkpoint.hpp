#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "latalign/model/model.hpp"

namespace latalign {

inline constexpr int kCheckpointVersion = 1;

/// Single-file layout: 8-byte magic, u64 header length, JSON header (spec,
/// user metadata, tensor table), then float64 little-endian blobs in table order.
void save_checkpoint(const std::filesystem::path& path, Model& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace latalign
