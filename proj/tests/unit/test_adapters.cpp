#include "latalign/io/adapters.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "latalign/io/edf.hpp"
#include "test_util.hpp"

using namespace latalign;
using namespace latalign::test;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

EdfSignalHeader signal_header(const std::string& label, std::size_t spr, double range = 500.0) {
  EdfSignalHeader s;
  s.label = label;
  s.physical_min = -range;
  s.physical_max = range;
  s.samples_per_record = spr;
  return s;
}

void write_motor_run(const fs::path& path, std::uint64_t seed) {
  EdfRecording rec;
  Rng rng(seed);
  for (const char* label : {"C3..", "Cz..", "Fcz.", "C4.."}) {
    rec.header.signals.push_back(signal_header(label, 160));
    std::vector<double> x(160 * 30);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = 20.0 * rng.normal() + 30.0 * std::sin(2 * std::numbers::pi * 10.0 * double(i) / 160.0);
    rec.signals.push_back(x);
  }
  rec.annotations = {{0.0, 4.1, "T0"}, {2.0, 4.1, "T1"}, {8.0, 4.1, "T2"}, {14.0, 4.1, "T1"}, {26.0, 4.1, "T2"}};
  write_edf(path, rec);
}

}  // namespace

TEST(Adapters, NormalizeChannelNames) {
  EXPECT_EQ(normalize_channel_name("Fcz."), "FCz");
  EXPECT_EQ(normalize_channel_name("Fp1."), "Fp1");
  EXPECT_EQ(normalize_channel_name("Iz.."), "Iz");
  EXPECT_EQ(normalize_channel_name("C3.."), "C3");
  EXPECT_EQ(normalize_channel_name("Af7."), "AF7");
  EXPECT_EQ(normalize_channel_name("Fpz."), "Fpz");
  EXPECT_EQ(normalize_channel_name("  T9 "), "T9");
}

TEST(Adapters, PhysionetSubjectList) {
  const auto subjects = physionet_mi_subjects();
  EXPECT_EQ(subjects.size(), 103u);
  for (int dropped : {88, 89, 92, 100, 104, 106})
    EXPECT_EQ(std::count(subjects.begin(), subjects.end(), dropped), 0);
  EXPECT_EQ(subjects.front(), 1);
  EXPECT_EQ(subjects.back(), 109);
}

TEST(Adapters, OpenBmiLeaves48Electrodes) {
  const std::vector<std::string> montage = {
      "Fp1", "Fp2", "F7",   "F3",    "Fz",    "F4",    "F8",   "FC5",   "FC1",   "FC2",   "FC6",
      "T7",  "C3",  "Cz",   "C4",    "T8",    "TP9",   "CP5",  "CP1",   "CP2",   "CP6",   "TP10",
      "P7",  "P3",  "Pz",   "P4",    "P8",    "PO9",   "O1",   "Oz",    "O2",    "PO10",  "FC3",
      "FC4", "C5",  "C1",   "C2",    "C6",    "CP3",   "CPz",  "CP4",   "P1",    "P2",    "POz",
      "FT9", "FTT9h", "TTP7h", "TP7", "TPP9h", "FT10", "FTT10h", "TPP8h", "TP8", "TPP10h", "F9",
      "F10", "AF7", "AF3",  "AF4",   "AF8",   "PO3",   "PO4"};
  ASSERT_EQ(montage.size(), 62u);
  TrialArchive raw;
  raw.rate_hz = 1000.0;
  raw.channel_names = montage;
  raw.class_names = {"target", "nontarget"};
  ArchiveSession s;
  s.subject = "s01";
  s.session = "sess01";
  s.n_trials = 2;
  s.n_channels = 62;
  s.n_times = 1000;
  Rng rng(4);
  for (std::size_t i = 0; i < 2 * 62 * 1000; ++i) s.data.push_back(float(rng.normal()));
  s.labels = {0, 1};
  raw.sessions.push_back(s);
  const TrialArchive out = prepare_openbmi(raw);
  EXPECT_EQ(out.channel_names.size(), 48u);
  EXPECT_EQ(openbmi_dropped_electrodes().size(), 14u);
  EXPECT_DOUBLE_EQ(out.rate_hz, 100.0);
  EXPECT_EQ(out.sessions[0].n_times, 100u);
  EXPECT_EQ(out.sessions[0].n_channels, 48u);
  // Common average reference leaves zero channel means per sample.
  const auto trial = out.sessions[0].trial(1);
  for (std::size_t t = 0; t < 100; ++t) {
    double m = 0.0;
    for (std::size_t c = 0; c < 48; ++c) m += trial[c * 100 + t];
    EXPECT_NEAR(m / 48.0, 0.0, 1e-5);
  }
}

TEST(Adapters, SleepStageMapping) {
  EXPECT_EQ(sleep_stage_label("Sleep stage W"), 0);
  EXPECT_EQ(sleep_stage_label("Sleep stage 1"), 1);
  EXPECT_EQ(sleep_stage_label("Sleep stage 2"), 2);
  EXPECT_EQ(sleep_stage_label("Sleep stage 3"), 3);
  EXPECT_EQ(sleep_stage_label("Sleep stage 4"), 3);
  EXPECT_EQ(sleep_stage_label("Sleep stage R"), 4);
  EXPECT_EQ(sleep_stage_label("Sleep stage ?"), -1);
  EXPECT_EQ(sleep_stage_label("Movement time"), -1);
  EXPECT_ERROR_CODE(sleep_stage_label("Sleep stage 5"), ErrorCode::UnknownStageCode);
}

TEST(Adapters, ImportPhysionetFromFixtures) {
  const fs::path root = fresh_dir("latalign_physionet");
  for (int subject : {1, 2}) {
    char sid[8];
    std::snprintf(sid, sizeof sid, "S%03d", subject);
    fs::create_directories(root / sid);
    write_motor_run(root / sid / (std::string(sid) + "R04.edf"), std::uint64_t(subject) * 10 + 4);
    write_motor_run(root / sid / (std::string(sid) + "R06.edf"), std::uint64_t(subject) * 10 + 6);
  }
  PhysionetMiOptions opt;
  opt.subjects = {1, 2};
  const TrialArchive a = import_physionet_mi(root, opt);
  ASSERT_EQ(a.sessions.size(), 2u);
  EXPECT_EQ(a.channel_names, (std::vector<std::string>{"C3", "Cz", "FCz", "C4"}));
  EXPECT_EQ(a.class_names, (std::vector<std::string>{"left_fist", "right_fist", "feet"}));
  // The cue at 26 s runs past the recording end; T1 in the feet runs is not a class.
  EXPECT_EQ(a.sessions[0].n_trials, 4u);
  EXPECT_EQ(a.sessions[0].n_times, 656u);
  EXPECT_EQ(a.sessions[0].labels, (std::vector<int>{0, 1, 0, 2}));
  EXPECT_EQ(a.sessions[1].subject, "S002");

  opt.subjects = {1, 2, 3};
  EXPECT_ERROR_CODE(import_physionet_mi(root, opt), ErrorCode::MissingSubjects);
  fs::remove_all(root);
}

TEST(Adapters, ImportSleepFromFixtures) {
  const fs::path root = fresh_dir("latalign_sleep");
  EdfRecording psg;
  Rng rng(8);
  for (const char* label : {"EEG Fpz-Cz", "EEG Pz-Oz", "EOG horizontal"}) {
    psg.header.signals.push_back(signal_header(label, 100, 200.0));
    std::vector<double> x(100 * 600);
    for (double& v : x) v = 15.0 * rng.normal();
    psg.signals.push_back(x);
  }
  write_edf(root / "SC4001E0-PSG.edf", psg);

  EdfRecording hyp;
  hyp.annotations = {{0, 240, "Sleep stage W"},   {240, 60, "Sleep stage 1"}, {300, 60, "Sleep stage 2"},
                     {360, 30, "Sleep stage 3"},  {390, 30, "Sleep stage 4"}, {420, 60, "Sleep stage R"},
                     {480, 30, "Sleep stage ?"},  {510, 90, "Sleep stage W"}};
  write_edf(root / "SC4001EC-Hypnogram.edf", hyp);

  SleepOptions opt;
  opt.wake_margin_s = 60.0;
  const TrialArchive a = import_sleep(root, opt);
  ASSERT_EQ(a.sessions.size(), 1u);
  const auto& s = a.sessions[0];
  EXPECT_EQ(s.subject, "SC400");
  EXPECT_EQ(s.session, "SC4001");
  EXPECT_EQ(s.n_channels, 2u);
  EXPECT_EQ(s.n_times, 3000u);
  // Wake is kept only within the margin around the first and last sleep epochs.
  EXPECT_EQ(s.labels, (std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 0}));
  EXPECT_EQ(a.class_names.size(), 5u);

  hyp.annotations.push_back({600, 30, "Sleep stage X"});
  write_edf(root / "SC4001EC-Hypnogram.edf", hyp);
  EXPECT_ERROR_CODE(import_sleep(root, opt), ErrorCode::UnknownStageCode);
  fs::remove_all(root);

  const fs::path empty = fresh_dir("latalign_sleep_empty");
  EXPECT_ERROR_CODE(import_sleep(empty, opt), ErrorCode::MissingSubjects);
  fs::remove_all(empty);
}
