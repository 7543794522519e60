#include "latalign/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Dense>

#include "latalign/error.hpp"
#include "latalign/random.hpp"

namespace latalign {

namespace {

constexpr std::uint64_t kPatternStream = 0xC1A55ULL;

const std::vector<std::string>& channel_pool() {
  static const std::vector<std::string> pool = {
      "Fpz", "F7",  "F8",  "C3",  "Cz",  "C4",  "P3",  "P4",  "Fp1", "Fp2", "F3",
      "Fz",  "F4",  "T7",  "T8",  "CP3", "CPz", "CP4", "Pz",  "O1",  "Oz",  "O2",
      "FC3", "FCz", "FC4", "C1",  "C2",  "C5",  "C6",  "P7",  "P8",  "POz", "AF3",
      "AF4", "FC1", "FC2", "CP1", "CP2", "P1",  "P2",  "PO3", "PO4", "AF7", "AF8",
      "FC5", "FC6", "CP5", "CP6", "FT7", "FT8", "TP7", "TP8", "PO7", "PO8", "F1",
      "F2",  "F5",  "F6",  "AFz", "Iz",  "T9",  "T10", "FT9", "FT10"};
  return pool;
}

// Pink background via a three-pole 1/f approximation, standardized per row.
void pink_noise(Rng& rng, double* out, std::size_t n) {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  auto step = [&]() {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    return b0 + b1 + b2 + w * 0.1848;
  };
  for (int k = 0; k < 256; ++k) step();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = step();
    mean += out[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (out[i] - mean) * (out[i] - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) out[i] = (out[i] - mean) / (sd > 0.0 ? sd : 1.0);
}

Eigen::MatrixXd subject_mixing(Rng& rng, const SyntheticSpec& spec) {
  const auto c = static_cast<Eigen::Index>(spec.n_channels);
  Eigen::MatrixXd b(c, c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j) b(i, j) = rng.normal();
  const Eigen::MatrixXd skew = 0.5 * spec.mixing_perturbation * (b - b.transpose());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(c, c);
  // Cayley transform of a skew matrix is exactly orthogonal.
  const Eigen::MatrixXd rotation = (eye - skew).partialPivLu().solve(eye + skew);
  Eigen::VectorXd gains(c);
  for (Eigen::Index i = 0; i < c; ++i) gains(i) = rng.uniform(spec.gain_min, spec.gain_max);
  return gains.asDiagonal() * rotation;
}

std::vector<int> subject_labels(Rng& rng, const SyntheticSpec& spec) {
  const std::size_t n = spec.trials_per_subject;
  std::vector<int> labels;
  if (spec.class_proportions.empty()) {
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(i % spec.n_classes));
  } else {
    std::vector<std::size_t> counts(spec.n_classes);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < spec.n_classes; ++k) {
      counts[k] = static_cast<std::size_t>(std::floor(spec.class_proportions[k] * n));
      assigned += counts[k];
    }
    for (std::size_t k = 0; assigned < n; k = (k + 1) % spec.n_classes, ++assigned) ++counts[k];
    for (std::size_t k = 0; k < spec.n_classes; ++k)
      labels.insert(labels.end(), counts[k], static_cast<int>(k));
  }
  rng.shuffle(labels);
  return labels;
}

// Polarity of the frontal transient per class: left cue, right cue, downward cue.
double artifact_polarity(std::size_t channel_slot, int label) {
  static const double table[3][3] = {{1.0, -1.0, 0.3}, {-1.0, 1.0, 0.3}, {0.0, 0.0, -1.0}};
  return table[static_cast<std::size_t>(label) % 3][std::min<std::size_t>(channel_slot, 2)];
}

}  // namespace

void SyntheticSpec::validate() const {
  require(n_subjects >= 1 && trials_per_subject >= 1, ErrorCode::ConfigInvalid,
          "synthetic spec needs subjects and trials");
  require(n_channels >= 1 && n_channels <= channel_pool().size(), ErrorCode::ConfigInvalid,
          "synthetic channel count must be in [1, " + std::to_string(channel_pool().size()) + "]");
  require(n_classes >= 2, ErrorCode::ConfigInvalid, "synthetic data needs at least two classes");
  require(rate_hz > 0.0 && trial_s > 0.0, ErrorCode::ConfigInvalid, "rate and length must be positive");
  require(snr >= 0.0, ErrorCode::ConfigInvalid, "snr must be non-negative");
  require(class_frequency_step >= 0.0, ErrorCode::ConfigInvalid, "class_frequency_step must be non-negative");
  require(gain_min > 0.0 && gain_max >= gain_min, ErrorCode::ConfigInvalid, "invalid gain range");
  require(std::abs(mixing_perturbation) < 10.0, ErrorCode::ConfigInvalid,
          "mixing perturbation out of range");
  require(class_proportions.empty() || class_proportions.size() == n_classes,
          ErrorCode::ConfigInvalid, "class_proportions needs one entry per class");
  for (std::size_t c : class_channels)
    require(c < n_channels, ErrorCode::ConfigInvalid, "class channel index out of range");
  if (artifact.enabled) {
    require(artifact.end_s > artifact.start_s && artifact.start_s >= 0.0 &&
                artifact.end_s <= trial_s + 1e-9,
            ErrorCode::ConfigInvalid, "artifact window must lie inside the trial");
    const auto names = synthetic_channel_names(n_channels);
    for (const auto& ch : artifact.channels)
      require(std::find(names.begin(), names.end(), ch) != names.end(), ErrorCode::ConfigInvalid,
              "artifact channel " + ch + " is not part of the synthetic montage");
  }
}

std::vector<std::string> synthetic_channel_names(std::size_t n_channels) {
  require(n_channels <= channel_pool().size(), ErrorCode::ConfigInvalid, "too many channels");
  return {channel_pool().begin(), channel_pool().begin() + static_cast<std::ptrdiff_t>(n_channels)};
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"n_subjects", s.n_subjects},
       {"trials_per_subject", s.trials_per_subject},
       {"n_channels", s.n_channels},
       {"n_classes", s.n_classes},
       {"rate_hz", s.rate_hz},
       {"trial_s", s.trial_s},
       {"mixing_perturbation", s.mixing_perturbation},
       {"gain_min", s.gain_min},
       {"gain_max", s.gain_max},
       {"offset_scale", s.offset_scale},
       {"snr", s.snr},
       {"class_frequency_hz", s.class_frequency_hz},
       {"class_frequency_step", s.class_frequency_step},
       {"phase_jitter", s.phase_jitter},
       {"class_channels", s.class_channels},
       {"class_proportions", s.class_proportions},
       {"seed", s.seed},
       {"artifact",
        {{"enabled", s.artifact.enabled},
         {"start_s", s.artifact.start_s},
         {"end_s", s.artifact.end_s},
         {"amplitude", s.artifact.amplitude},
         {"channels", s.artifact.channels}}}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  static const std::vector<std::string> known = {
      "n_subjects", "trials_per_subject", "n_channels", "n_classes", "rate_hz", "trial_s",
      "mixing_perturbation", "gain_min", "gain_max", "offset_scale", "snr",
      "class_frequency_hz", "class_frequency_step", "phase_jitter", "class_channels", "class_proportions", "seed",
      "artifact"};
  std::string unknown;
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) unknown += " " + key;
  require(unknown.empty(), ErrorCode::ConfigInvalid, "unknown synthetic spec keys:" + unknown);
  SyntheticSpec d;
  s.n_subjects = j.value("n_subjects", d.n_subjects);
  s.trials_per_subject = j.value("trials_per_subject", d.trials_per_subject);
  s.n_channels = j.value("n_channels", d.n_channels);
  s.n_classes = j.value("n_classes", d.n_classes);
  s.rate_hz = j.value("rate_hz", d.rate_hz);
  s.trial_s = j.value("trial_s", d.trial_s);
  s.mixing_perturbation = j.value("mixing_perturbation", d.mixing_perturbation);
  s.gain_min = j.value("gain_min", d.gain_min);
  s.gain_max = j.value("gain_max", d.gain_max);
  s.offset_scale = j.value("offset_scale", d.offset_scale);
  s.snr = j.value("snr", d.snr);
  s.class_frequency_hz = j.value("class_frequency_hz", d.class_frequency_hz);
  s.class_frequency_step = j.value("class_frequency_step", d.class_frequency_step);
  s.phase_jitter = j.value("phase_jitter", d.phase_jitter);
  s.class_channels = j.value("class_channels", d.class_channels);
  s.class_proportions = j.value("class_proportions", d.class_proportions);
  s.seed = j.value("seed", d.seed);
  if (j.contains("artifact")) {
    const auto& a = j["artifact"];
    s.artifact.enabled = a.value("enabled", d.artifact.enabled);
    s.artifact.start_s = a.value("start_s", d.artifact.start_s);
    s.artifact.end_s = a.value("end_s", d.artifact.end_s);
    s.artifact.amplitude = a.value("amplitude", d.artifact.amplitude);
    s.artifact.channels = a.value("channels", d.artifact.channels);
  }
}

TrialArchive generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t c = spec.n_channels;
  const auto t = static_cast<std::size_t>(std::llround(spec.trial_s * spec.rate_hz));
  require(t >= 2, ErrorCode::ConfigInvalid, "synthetic trials need at least two samples");
  const auto C = static_cast<Eigen::Index>(c);
  const auto T = static_cast<Eigen::Index>(t);

  TrialArchive archive;
  archive.rate_hz = spec.rate_hz;
  archive.channel_names = synthetic_channel_names(c);
  for (std::size_t k = 0; k < spec.n_classes; ++k) archive.class_names.push_back("class" + std::to_string(k));
  nlohmann::json js = spec;
  archive.provenance = {{"source", "synthetic"}, {"spec", js}};

  // Class patterns and base phases are shared by all subjects.
  Rng pattern_rng(derive_seed(spec.seed, kPatternStream));
  std::vector<Eigen::VectorXd> patterns;
  std::vector<double> base_phase;
  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(C);
    for (Eigen::Index ch = 0; ch < C; ++ch) {
      const bool allowed = spec.class_channels.empty() ||
                           std::find(spec.class_channels.begin(), spec.class_channels.end(),
                                     static_cast<std::size_t>(ch)) != spec.class_channels.end();
      const double v = pattern_rng.normal();
      if (allowed) p(ch) = v;
    }
    if (spec.class_channels.size() == 1) p(static_cast<Eigen::Index>(spec.class_channels[0])) = 1.0;
    p /= std::max(p.norm(), 1e-12);
    patterns.push_back(p);
    base_phase.push_back(2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(spec.n_classes));
  }

  std::vector<Eigen::Index> artifact_rows;
  if (spec.artifact.enabled)
    for (const auto& name : spec.artifact.channels)
      artifact_rows.push_back(static_cast<Eigen::Index>(
          std::find(archive.channel_names.begin(), archive.channel_names.end(), name) -
          archive.channel_names.begin()));

  const int width = spec.n_subjects >= 100 ? 3 : 2;
  for (std::size_t subj = 0; subj < spec.n_subjects; ++subj) {
    Rng rng(derive_seed(spec.seed, subj));
    const Eigen::MatrixXd mixing = subject_mixing(rng, spec);
    Eigen::VectorXd offset(C);
    for (Eigen::Index ch = 0; ch < C; ++ch) offset(ch) = spec.offset_scale * rng.normal();
    const std::vector<int> labels = subject_labels(rng, spec);

    ArchiveSession session;
    char id[16];
    std::snprintf(id, sizeof id, "S%0*zu", width, subj + 1);
    session.subject = id;
    session.session = "s1";
    session.n_trials = spec.trials_per_subject;
    session.n_channels = c;
    session.n_times = t;
    session.labels = labels;
    session.data.resize(session.n_trials * c * t);

    Eigen::MatrixXd source(C, T);
    for (std::size_t trial = 0; trial < session.n_trials; ++trial) {
      const int label = labels[trial];
      for (Eigen::Index ch = 0; ch < C; ++ch) {
        std::vector<double> row(t);
        pink_noise(rng, row.data(), t);
        for (Eigen::Index s = 0; s < T; ++s) source(ch, s) = row[static_cast<std::size_t>(s)];
      }
      const double jitter = rng.uniform(-spec.phase_jitter, spec.phase_jitter);
      const double artifact_jitter = rng.uniform(-0.1, 0.1);
      if (spec.snr > 0.0) {
        const double freq = spec.class_frequency_hz * (1.0 + spec.class_frequency_step * label);
        Eigen::RowVectorXd wave(T);
        for (Eigen::Index s = 0; s < T; ++s) {
          const double time = static_cast<double>(s) / spec.rate_hz;
          const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (s + 0.5) / T);
          wave(s) = hann * std::sin(2.0 * std::numbers::pi * freq * time +
                                    base_phase[static_cast<std::size_t>(label)] + jitter);
        }
        const double rms = std::sqrt(wave.squaredNorm() / static_cast<double>(T));
        source += (spec.snr * std::sqrt(static_cast<double>(c)) / std::max(rms, 1e-12)) *
                  patterns[static_cast<std::size_t>(label)] * wave;
      }
      Eigen::MatrixXd x = mixing * source;
      x.colwise() += offset;

      if (spec.artifact.enabled) {
        const double width_s = spec.artifact.end_s - spec.artifact.start_s;
        const double center = spec.artifact.start_s + width_s * (0.5 + artifact_jitter);
        const double sigma = width_s / 6.0;
        for (std::size_t slot = 0; slot < artifact_rows.size(); ++slot) {
          const double polarity = artifact_polarity(slot, label);
          for (Eigen::Index s = 0; s < T; ++s) {
            const double time = static_cast<double>(s) / spec.rate_hz;
            if (time < spec.artifact.start_s || time >= spec.artifact.end_s) continue;
            const double z = (time - center) / sigma;
            x(artifact_rows[slot], s) += spec.artifact.amplitude * polarity * std::exp(-0.5 * z * z);
          }
        }
      }

      float* dst = session.data.data() + trial * c * t;
      for (Eigen::Index ch = 0; ch < C; ++ch)
        for (Eigen::Index s = 0; s < T; ++s)
          dst[static_cast<std::size_t>(ch) * t + static_cast<std::size_t>(s)] =
              static_cast<float>(x(ch, s));
    }
    archive.sessions.push_back(std::move(session));
  }
  return archive;
}

}  // namespace latalign
