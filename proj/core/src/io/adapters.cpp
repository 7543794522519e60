#include "latalign/io/adapters.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "latalign/error.hpp"
#include "latalign/io/edf.hpp"
#include "latalign/log.hpp"
#include "latalign/signal/epoch.hpp"
#include "latalign/signal/filter.hpp"
#include "latalign/signal/rereference.hpp"
#include "latalign/signal/resample.hpp"

namespace fs = std::filesystem;

namespace latalign {

namespace {

SignalMatrix to_matrix(const EdfRecording& rec, const std::vector<std::size_t>& signals) {
  std::size_t t = rec.signals.at(signals.front()).size();
  for (auto s : signals) t = std::min(t, rec.signals.at(s).size());
  SignalMatrix m(static_cast<Eigen::Index>(signals.size()), static_cast<Eigen::Index>(t));
  for (std::size_t r = 0; r < signals.size(); ++r)
    for (std::size_t i = 0; i < t; ++i)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = rec.signals[signals[r]][i];
  return m;
}

void append_trials(ArchiveSession& session, const Tensor& trials, const std::vector<int>& labels) {
  for (double v : trials.values()) session.data.push_back(static_cast<float>(v));
  session.labels.insert(session.labels.end(), labels.begin(), labels.end());
  session.n_trials += trials.dim(0);
}

std::vector<std::size_t> data_signals(const EdfRecording& rec) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rec.header.signals.size(); ++i)
    if (!rec.header.signals[i].is_annotation()) idx.push_back(i);
  return idx;
}

}  // namespace

std::string normalize_channel_name(std::string_view raw) {
  std::string name;
  for (char ch : raw)
    if (ch != '.' && !std::isspace(static_cast<unsigned char>(ch)))
      name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (name.empty()) return name;
  if (name.size() >= 2 && name.compare(0, 2, "FP") == 0) name[1] = 'p';
  for (std::size_t i = 1; i < name.size(); ++i)
    if (name[i] == 'Z' || name[i] == 'H') name[i] = static_cast<char>(std::tolower(name[i]));
  return name;
}

std::vector<int> physionet_mi_subjects() {
  static const std::set<int> dropped = {88, 89, 92, 100, 104, 106};
  std::vector<int> subjects;
  for (int s = 1; s <= 109; ++s)
    if (!dropped.count(s)) subjects.push_back(s);
  return subjects;
}

TrialArchive import_physionet_mi(const fs::path& root, const PhysionetMiOptions& options) {
  const std::vector<int> subjects = options.subjects.empty() ? physionet_mi_subjects() : options.subjects;
  // Runs with left/right fist cues (T1/T2) and runs with fists/feet cues (T2 = feet).
  const bool imagery = options.paradigm == MotorParadigm::Imagery;
  const std::vector<int> hand_runs = imagery ? std::vector<int>{4, 8, 12} : std::vector<int>{3, 7, 11};
  const std::vector<int> feet_runs = imagery ? std::vector<int>{6, 10, 14} : std::vector<int>{5, 9, 13};

  TrialArchive archive;
  archive.rate_hz = 160.0;
  archive.class_names = {"left_fist", "right_fist", "feet"};
  archive.provenance = {{"source", "physionet_mi"},
                        {"paradigm", imagery ? "imagery" : "execution"},
                        {"bandpass_hz", {4.0, 40.0}},
                        {"notch_hz", 60.0},
                        {"reference", "average"}};

  std::vector<std::string> missing;
  for (int subject : subjects) {
    char sid[8];
    std::snprintf(sid, sizeof sid, "S%03d", subject);
    const fs::path dir = root / sid;
    ArchiveSession session;
    session.subject = sid;
    session.session = imagery ? "imagery" : "execution";

    bool any_run = false;
    for (int pass = 0; pass < 2; ++pass) {
      const auto& runs = pass == 0 ? hand_runs : feet_runs;
      for (int run : runs) {
        char fname[20];
        std::snprintf(fname, sizeof fname, "%sR%02d.edf", sid, run);
        const fs::path path = dir / fname;
        if (!fs::exists(path)) continue;
        any_run = true;
        const EdfRecording rec = parse_edf(path);
        const auto signals = data_signals(rec);
        require(!signals.empty(), ErrorCode::MalformedHeader, path.string() + " has no EEG signals");
        require(std::abs(rec.sample_rate(signals.front()) - archive.rate_hz) < 1e-6,
                ErrorCode::MalformedHeader, path.string() + ": expected 160 Hz");
        std::vector<std::string> names;
        for (auto s : signals) names.push_back(normalize_channel_name(rec.header.signals[s].label));
        if (archive.channel_names.empty()) archive.channel_names = names;
        require(names == archive.channel_names, ErrorCode::ShapeMismatch,
                path.string() + ": channel layout differs from earlier recordings");

        SignalMatrix x = to_matrix(rec, signals);
        x = apply_filter(x, archive.rate_hz, FilterSpec::bandpass(4.0, 40.0, 3));
        x = apply_filter(x, archive.rate_hz, FilterSpec::notch(60.0));
        x = common_average_reference(x);

        std::vector<Event> events;
        for (const auto& a : rec.annotations) {
          int code = -1;
          if (a.text == "T1" && pass == 0) code = 0;
          if (a.text == "T2") code = pass == 0 ? 1 : 2;
          if (code < 0) continue;
          events.push_back({static_cast<std::size_t>(std::llround(a.onset_s * archive.rate_hz)), code});
        }
        if (events.empty()) {
          log_warning(path.string() + ": no cue annotations");
          continue;
        }
        EpochSpec spec;
        spec.t_start_s = options.t_start_s;
        spec.t_end_s = options.t_end_s;
        spec.event_codes = {{0, 0}, {1, 1}, {2, 2}};
        const EpochResult ep = epoch(x, events, spec, archive.rate_hz);
        session.n_channels = ep.trials.signals.dim(1);
        session.n_times = ep.trials.signals.dim(2);
        append_trials(session, ep.trials.signals, ep.trials.labels);
      }
    }
    if (!any_run) {
      missing.push_back(sid);
      continue;
    }
    if (session.n_trials > 0) archive.sessions.push_back(std::move(session));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += " " + m;
    fail(ErrorCode::MissingSubjects, "no runs found under " + root.string() + " for:" + list);
  }
  archive.validate();
  return archive;
}

int sleep_stage_label(std::string_view annotation) {
  static const std::map<std::string, int, std::less<>> table = {
      {"Sleep stage W", 0}, {"Sleep stage 1", 1}, {"Sleep stage 2", 2}, {"Sleep stage 3", 3},
      {"Sleep stage 4", 3}, {"Sleep stage R", 4}, {"Sleep stage ?", -1}, {"Movement time", -1}};
  const auto it = table.find(annotation);
  if (it == table.end()) fail(ErrorCode::UnknownStageCode, "unknown hypnogram code '" + std::string(annotation) + "'");
  return it->second;
}

TrialArchive import_sleep(const fs::path& root, const SleepOptions& options) {
  require(fs::is_directory(root), ErrorCode::Io, "not a directory: " + root.string());
  std::map<std::string, fs::path> psg, hyp;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name.size() < 6 || entry.path().extension() != ".edf") continue;
    const std::string key = name.substr(0, 6);
    if (name.find("PSG") != std::string::npos) psg[key] = entry.path();
    if (name.find("Hypnogram") != std::string::npos) hyp[key] = entry.path();
  }
  require(!psg.empty(), ErrorCode::MissingSubjects, "no PSG recordings under " + root.string());

  TrialArchive archive;
  archive.channel_names = options.channels;
  archive.class_names = {"W", "N1", "N2", "N3", "REM"};
  archive.provenance = {{"source", "physionet_sleep"}, {"bandpass_hz", {0.1, 45.0}}};

  for (const auto& [key, psg_path] : psg) {
    const auto h = hyp.find(key);
    if (h == hyp.end()) {
      log_warning("no hypnogram for " + psg_path.string() + ", skipped");
      continue;
    }
    const EdfRecording rec = parse_edf(psg_path);
    const EdfRecording hypno = parse_edf(h->second);
    std::vector<std::size_t> signals;
    for (const auto& ch : options.channels) {
      const auto idx = rec.find_signal(ch);
      require(idx.has_value(), ErrorCode::MalformedHeader, psg_path.string() + " lacks channel " + ch);
      signals.push_back(*idx);
    }
    const double rate = rec.sample_rate(signals.front());
    if (archive.rate_hz == 0.0) archive.rate_hz = rate;
    require(std::abs(rate - archive.rate_hz) < 1e-6, ErrorCode::ShapeMismatch,
            psg_path.string() + ": sampling rate differs from earlier recordings");

    SignalMatrix x = apply_filter(to_matrix(rec, signals), rate, FilterSpec::bandpass(0.1, 45.0, 3));

    // Expand annotations onto the 30 s grid.
    std::vector<std::pair<double, int>> grid;
    for (const auto& a : hypno.annotations) {
      const int label = sleep_stage_label(a.text);
      const auto n = static_cast<long>(std::floor(a.duration_s / options.epoch_s + 1e-9));
      for (long k = 0; k < n; ++k) grid.emplace_back(a.onset_s + static_cast<double>(k) * options.epoch_s, label);
    }
    double first_sleep = -1.0, last_sleep = -1.0;
    for (const auto& [onset, label] : grid)
      if (label > 0) {
        if (first_sleep < 0.0) first_sleep = onset;
        last_sleep = onset;
      }
    if (first_sleep < 0.0) {
      log_warning(psg_path.string() + ": no sleep epochs, skipped");
      continue;
    }

    std::vector<Event> events;
    for (const auto& [onset, label] : grid) {
      if (label < 0) continue;
      if (label == 0 && (onset < first_sleep - options.wake_margin_s ||
                         onset > last_sleep + options.wake_margin_s))
        continue;
      events.push_back({static_cast<std::size_t>(std::llround(onset * rate)), label});
    }
    EpochSpec spec;
    spec.t_start_s = 0.0;
    spec.t_end_s = options.epoch_s;
    spec.event_codes = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
    const EpochResult ep = epoch(x, events, spec, rate);

    ArchiveSession session;
    session.subject = key.substr(0, 5);
    session.session = key;
    session.n_channels = ep.trials.signals.dim(1);
    session.n_times = ep.trials.signals.dim(2);
    append_trials(session, ep.trials.signals, ep.trials.labels);
    archive.sessions.push_back(std::move(session));
  }
  require(!archive.sessions.empty(), ErrorCode::MissingSubjects,
          "no paired PSG/hypnogram recordings under " + root.string());
  archive.validate();
  return archive;
}

const std::vector<std::string>& openbmi_dropped_electrodes() {
  static const std::vector<std::string> dropped = {"TP9",   "TP10",   "PO9",    "PO10",  "FT9",
                                                   "FTT9h", "TTP7h",  "TPP9h",  "FT10",  "FTT10h",
                                                   "TPP8h", "TPP10h", "F9",     "F10"};
  return dropped;
}

TrialArchive prepare_openbmi(const TrialArchive& raw) {
  raw.validate();
  const auto& dropped = openbmi_dropped_electrodes();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < raw.channel_names.size(); ++c)
    if (std::find(dropped.begin(), dropped.end(), raw.channel_names[c]) == dropped.end()) keep.push_back(c);

  constexpr double kRate = 100.0;
  TrialArchive out;
  out.rate_hz = kRate;
  out.class_names = raw.class_names;
  for (auto c : keep) out.channel_names.push_back(raw.channel_names[c]);
  out.provenance = {{"source", "openbmi"},
                    {"input", raw.provenance},
                    {"bandpass_hz", {0.5, 45.0}},
                    {"reference", "average"}};

  const FilterSpec band = FilterSpec::bandpass(0.5, 45.0, 3);
  for (const auto& s : raw.sessions) {
    ArchiveSession session;
    session.subject = s.subject;
    session.session = s.session;
    session.labels = s.labels;
    session.n_trials = s.n_trials;
    session.n_channels = keep.size();
    for (std::size_t i = 0; i < s.n_trials; ++i) {
      const auto src = s.trial(i);
      SignalMatrix x(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(s.n_times));
      for (std::size_t r = 0; r < keep.size(); ++r)
        for (std::size_t t = 0; t < s.n_times; ++t)
          x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = src[keep[r] * s.n_times + t];
      if (std::abs(raw.rate_hz - kRate) > 1e-9) x = resample(x, raw.rate_hz, kRate);
      x = common_average_reference(apply_filter(x, kRate, band));
      session.n_times = static_cast<std::size_t>(x.cols());
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index t = 0; t < x.cols(); ++t) session.data.push_back(static_cast<float>(x(r, t)));
    }
    out.sessions.push_back(std::move(session));
  }
  out.validate();
  return out;
}

TrialArchive import_openbmi(const fs::path& archive_dir) {
  return prepare_openbmi(read_trial_archive(archive_dir));
}

}  // namespace latalign
