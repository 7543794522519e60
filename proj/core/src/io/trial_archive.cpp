#include "latalign/io/trial_archive.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "latalign/error.hpp"

namespace latalign {

namespace fs = std::filesystem;

std::size_t TrialArchive::total_trials() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.n_trials;
  return n;
}

std::vector<std::string> TrialArchive::subjects() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : sessions)
    if (seen.insert(s.subject).second) out.push_back(s.subject);
  return out;
}

std::vector<std::size_t> TrialArchive::sessions_of(std::span<const std::string> subjects) const {
  const std::set<std::string> wanted(subjects.begin(), subjects.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sessions.size(); ++i)
    if (wanted.count(sessions[i].subject)) out.push_back(i);
  return out;
}

void TrialArchive::validate() const {
  require(rate_hz > 0.0, ErrorCode::MalformedHeader, "archive rate must be positive");
  for (const auto& s : sessions) {
    require(s.n_channels == channel_names.size(), ErrorCode::ShapeMismatch,
            "session " + s.subject + "/" + s.session + " has " + std::to_string(s.n_channels) +
                " channels but " + std::to_string(channel_names.size()) + " names");
    require(s.data.size() == s.n_trials * s.n_channels * s.n_times, ErrorCode::ShapeMismatch,
            "session " + s.subject + "/" + s.session + " data size does not match shape");
    require(s.labels.size() == s.n_trials, ErrorCode::ShapeMismatch,
            "session " + s.subject + "/" + s.session + " needs one label per trial");
    for (int label : s.labels)
      require(label >= 0 && (class_names.empty() ||
                             static_cast<std::size_t>(label) < class_names.size()),
              ErrorCode::ShapeMismatch, "label out of range in " + s.subject);
  }
}

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

}  // namespace

void write_trial_archive(const TrialArchive& archive, const fs::path& dir) {
  archive.validate();
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["format"] = "latalign-trial-archive";
  meta["version"] = kArchiveFormatVersion;
  meta["rate_hz"] = archive.rate_hz;
  meta["channel_names"] = archive.channel_names;
  meta["class_names"] = archive.class_names;
  meta["dtype"] = "float32";
  meta["byte_order"] = "little";
  meta["provenance"] = archive.provenance;
  meta["sessions"] = nlohmann::json::array();
  for (std::size_t k = 0; k < archive.sessions.size(); ++k) {
    const auto& s = archive.sessions[k];
    char name[32];
    std::snprintf(name, sizeof name, "session_%04zu.f32", k);
    meta["sessions"].push_back({{"subject", s.subject},
                                {"session", s.session},
                                {"file", name},
                                {"shape", {s.n_trials, s.n_channels, s.n_times}},
                                {"labels", s.labels}});
    std::vector<std::uint32_t> words(s.data.size());
    for (std::size_t i = 0; i < s.data.size(); ++i)
      words[i] = to_little(std::bit_cast<std::uint32_t>(s.data[i]));
    std::ofstream out(dir / name, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + (dir / name).string());
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  }
  std::ofstream out(dir / kArchiveMetadataFile);
  require(out.good(), ErrorCode::Io, "cannot write metadata in " + dir.string());
  out << meta.dump(2) << '\n';
}

TrialArchive read_trial_archive(const fs::path& dir) {
  std::ifstream in(dir / kArchiveMetadataFile);
  require(in.good(), ErrorCode::Io, "no " + std::string(kArchiveMetadataFile) + " in " + dir.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, "archive metadata is not valid JSON: " + std::string(e.what()));
  }
  TrialArchive archive;
  try {
    require(meta.value("dtype", "") == "float32", ErrorCode::MalformedHeader,
            "archive dtype must be float32");
    require(meta.value("byte_order", "") == "little", ErrorCode::MalformedHeader,
            "archive byte order must be little");
    archive.rate_hz = meta.at("rate_hz").get<double>();
    archive.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    archive.class_names = meta.value("class_names", std::vector<std::string>{});
    if (meta.contains("provenance")) archive.provenance = meta["provenance"];
    for (const auto& js : meta.at("sessions")) {
      ArchiveSession s;
      s.subject = js.at("subject").get<std::string>();
      s.session = js.at("session").get<std::string>();
      const auto shape = js.at("shape").get<std::vector<std::size_t>>();
      require(shape.size() == 3, ErrorCode::MalformedHeader, "session shape must have 3 axes");
      s.n_trials = shape[0];
      s.n_channels = shape[1];
      s.n_times = shape[2];
      s.labels = js.at("labels").get<std::vector<int>>();
      const fs::path file = dir / js.at("file").get<std::string>();
      const std::size_t expected = s.n_trials * s.n_channels * s.n_times;
      require(fs::exists(file), ErrorCode::Io, "missing tensor file " + file.string());
      require(fs::file_size(file) == expected * 4, ErrorCode::ShapeMismatch,
              file.string() + " holds " + std::to_string(fs::file_size(file) / 4) +
                  " floats, metadata shape needs " + std::to_string(expected));
      std::vector<std::uint32_t> words(expected);
      std::ifstream data(file, std::ios::binary);
      data.read(reinterpret_cast<char*>(words.data()),
                static_cast<std::streamsize>(expected * sizeof(std::uint32_t)));
      require(static_cast<std::size_t>(data.gcount()) == expected * 4, ErrorCode::TruncatedRecord,
              "short read from " + file.string());
      s.data.resize(expected);
      for (std::size_t i = 0; i < expected; ++i)
        s.data[i] = std::bit_cast<float>(to_little(words[i]));
      archive.sessions.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, "archive metadata: " + std::string(e.what()));
  }
  archive.validate();
  return archive;
}

TrialBatch gather_trials(const TrialArchive& archive, std::span<const TrialRef> refs) {
  TrialBatch batch;
  if (refs.empty()) return batch;
  const auto& first = archive.sessions.at(refs[0].session);
  const std::size_t c = first.n_channels, t = first.n_times;
  batch.signals = Tensor({refs.size(), c, t});
  batch.labels.reserve(refs.size());
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& s = archive.sessions.at(refs[k].session);
    require(s.n_channels == c && s.n_times == t, ErrorCode::ShapeMismatch,
            "sessions with different trial shapes cannot share a batch");
    require(refs[k].trial < s.n_trials, ErrorCode::InvalidArgument, "trial index out of range");
    const auto src = s.trial(refs[k].trial);
    std::copy(src.begin(), src.end(), batch.signals.trial(k).begin());
    batch.labels.push_back(s.labels[refs[k].trial]);
    batch.subjects.push_back(s.subject);
    batch.sessions.push_back(s.session);
  }
  return batch;
}

TrialBatch gather_sessions(const TrialArchive& archive, std::span<const std::size_t> sessions) {
  std::vector<TrialRef> refs;
  for (std::size_t s : sessions)
    for (std::size_t i = 0; i < archive.sessions.at(s).n_trials; ++i) refs.push_back({s, i});
  return gather_trials(archive, refs);
}

TrialBatch session_batch(const TrialArchive& archive, std::size_t session) {
  const std::size_t one[] = {session};
  return gather_sessions(archive, one);
}

TrialArchive crop_archive(const TrialArchive& archive, double t0_s, double t1_s) {
  require(t1_s > t0_s && t0_s >= 0.0, ErrorCode::InvalidArgument, "invalid crop window");
  const auto s0 = static_cast<std::size_t>(std::llround(t0_s * archive.rate_hz));
  const auto s1 = static_cast<std::size_t>(std::llround(t1_s * archive.rate_hz));
  TrialArchive out = archive;
  out.provenance["crop_s"] = {t0_s, t1_s};
  for (auto& s : out.sessions) {
    require(s1 <= s.n_times && s1 > s0, ErrorCode::ShapeMismatch,
            "crop window exceeds trial length of " + s.subject);
    const std::size_t len = s1 - s0;
    std::vector<float> data(s.n_trials * s.n_channels * len);
    for (std::size_t i = 0; i < s.n_trials; ++i)
      for (std::size_t c = 0; c < s.n_channels; ++c)
        std::memcpy(&data[(i * s.n_channels + c) * len],
                    &s.data[(i * s.n_channels + c) * s.n_times + s0], len * sizeof(float));
    s.data = std::move(data);
    s.n_times = len;
  }
  return out;
}

}  // namespace latalign
