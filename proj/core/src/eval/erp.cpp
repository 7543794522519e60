#include "latalign/eval/erp.hpp"

#include <algorithm>
#include <map>

#include "latalign/error.hpp"
#include "latalign/signal/filter.hpp"

namespace latalign {

ErpAverage erp_grand_average(const TrialArchive& archive, const std::vector<std::string>& electrodes,
                             std::optional<std::pair<double, double>> band_hz) {
  archive.validate();
  require(!archive.sessions.empty(), ErrorCode::InsufficientTrials, "archive has no sessions");
  std::vector<std::size_t> rows;
  for (const auto& e : electrodes) {
    const auto it = std::find(archive.channel_names.begin(), archive.channel_names.end(), e);
    require(it != archive.channel_names.end(), ErrorCode::UnknownElectrode, "electrode '" + e + "' is not in the archive");
    rows.push_back(static_cast<std::size_t>(it - archive.channel_names.begin()));
  }
  const std::size_t k = archive.n_classes(), m = rows.size();
  const std::size_t t = archive.sessions.front().n_times;
  std::optional<FilterSpec> band;
  if (band_hz) band = FilterSpec::bandpass(band_hz->first, band_hz->second, 3);

  using Traces = std::vector<std::vector<double>>;
  auto zeros = [&] { return Traces(m, std::vector<double>(t, 0.0)); };
  ErpAverage out;
  out.electrodes = electrodes;
  out.classes = archive.class_names;
  for (std::size_t i = 0; i < t; ++i) out.times_s.push_back(static_cast<double>(i) / archive.rate_hz);
  out.traces.assign(k, zeros());
  out.subject_counts.assign(k, 0);

  // Per subject: sums over all of its sessions' trials.
  std::map<std::string, std::pair<std::vector<Traces>, std::vector<std::size_t>>> per_subject;
  for (const auto& s : archive.sessions) {
    auto& [sums, counts] = per_subject[s.subject];
    if (sums.empty()) {
      sums.assign(k, zeros());
      counts.assign(k, 0);
    }
    for (std::size_t i = 0; i < s.n_trials; ++i) {
      const auto c = static_cast<std::size_t>(s.labels[i]);
      const auto trial = s.trial(i);
      for (std::size_t r = 0; r < m; ++r) {
        std::vector<double> x(trial.begin() + static_cast<std::ptrdiff_t>(rows[r] * t),
                              trial.begin() + static_cast<std::ptrdiff_t>((rows[r] + 1) * t));
        if (band) x = apply_filter(x, archive.rate_hz, *band);
        for (std::size_t j = 0; j < t; ++j) sums[c][r][j] += x[j];
      }
      ++counts[c];
    }
  }
  for (const auto& [subject, entry] : per_subject) {
    const auto& [sums, counts] = entry;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      ++out.subject_counts[c];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < t; ++j) out.traces[c][r][j] += sums[c][r][j] / static_cast<double>(counts[c]);
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    if (out.subject_counts[c] > 0)
      for (auto& row : out.traces[c])
        for (double& v : row) v /= static_cast<double>(out.subject_counts[c]);
  return out;
}

nlohmann::json to_json(const ErpAverage& erp) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < erp.classes.size(); ++c) {
    nlohmann::json traces = nlohmann::json::object();
    for (std::size_t r = 0; r < erp.electrodes.size(); ++r) traces[erp.electrodes[r]] = erp.traces[c][r];
    classes.push_back({{"class", erp.classes[c]}, {"subjects", erp.subject_counts[c]}, {"traces", traces}});
  }
  return {{"times_s", erp.times_s}, {"classes", classes}};
}

}  // namespace latalign
