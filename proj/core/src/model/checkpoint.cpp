#include "latalign/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "latalign/error.hpp"

namespace latalign {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'T', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native order, which must be little-endian");

void append_blob(std::string& out, std::span<const double> values) {
  const auto* p = reinterpret_cast<const char*>(values.data());
  out.append(p, values.size() * sizeof(double));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Model& model, const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format"] = "latalign-checkpoint";
  header["version"] = kCheckpointVersion;
  header["spec"] = model.spec();
  header["metadata"] = metadata;
  nlohmann::json table = nlohmann::json::array();
  std::string blobs;

  for (const auto& p : model.parameters()) {
    table.push_back({{"name", p.name}, {"size", p.value.size()}});
    append_blob(blobs, p.value);
  }
  nlohmann::json stats = nlohmann::json::array();
  const auto layers = model.alignment_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& rs = layers[i]->running_stats();
    if (!rs) {
      stats.push_back(nullptr);
      continue;
    }
    stats.push_back({{"count", rs->count}});
    table.push_back({{"name", "norm" + std::to_string(i) + ".running_mean"}, {"size", rs->mean.size()}});
    append_blob(blobs, rs->mean);
    table.push_back({{"name", "norm" + std::to_string(i) + ".running_std"}, {"size", rs->std.size()}});
    append_blob(blobs, rs->std);
  }
  header["running_stats"] = stats;
  header["tensors"] = table;

  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
  require(out.good(), ErrorCode::Io, "failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  const std::string where = "checkpoint " + path.string();

  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 8) == 0, ErrorCode::MalformedHeader,
          where + ": bad magic");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof len);
  require(len <= bytes.size() - 16, ErrorCode::MalformedHeader, where + ": header length out of range");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, where + ": " + e.what());
  }
  require(header.value("format", "") == "latalign-checkpoint", ErrorCode::MalformedHeader,
          where + ": not a checkpoint");
  require(header.value("version", 0) == kCheckpointVersion, ErrorCode::MalformedHeader,
          where + ": unsupported version " + header.value("version", nlohmann::json()).dump());

  LoadedCheckpoint result;
  result.model = build_model(header.at("spec").get<ModelSpec>());
  result.metadata = header.value("metadata", nlohmann::json::object());

  std::size_t offset = 16 + len;
  std::map<std::string, std::vector<double>> blobs;
  for (const auto& entry : header.at("tensors")) {
    const auto size = entry.at("size").get<std::size_t>();
    require(offset + size * sizeof(double) <= bytes.size(), ErrorCode::TruncatedRecord,
            where + ": blob " + entry.at("name").get<std::string>() + " is truncated");
    std::vector<double> v(size);
    std::memcpy(v.data(), bytes.data() + offset, size * sizeof(double));
    offset += size * sizeof(double);
    blobs.emplace(entry.at("name").get<std::string>(), std::move(v));
  }

  for (auto& p : result.model->parameters()) {
    const auto it = blobs.find(p.name);
    require(it != blobs.end() && it->second.size() == p.value.size(), ErrorCode::IncompatibleShape,
            where + ": parameter " + p.name + " missing or mis-sized");
    std::copy(it->second.begin(), it->second.end(), p.value.begin());
  }
  const auto layers = result.model->alignment_layers();
  const auto& stats = header.at("running_stats");
  require(stats.size() == layers.size(), ErrorCode::IncompatibleShape, where + ": norm layer count differs");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (stats[i].is_null()) continue;
    ContextStats cs;
    cs.mean = blobs.at("norm" + std::to_string(i) + ".running_mean");
    cs.std = blobs.at("norm" + std::to_string(i) + ".running_std");
    cs.count = stats[i].at("count").get<std::size_t>();
    layers[i]->set_running_stats(std::move(cs));
  }
  return result;
}

}  // namespace latalign
