#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "latalign/io/trial_archive.hpp"

namespace latalign {

struct ErpAverage {
  std::vector<std::string> electrodes;
  std::vector<std::string> classes;
  std::vector<double> times_s;
  /// traces[class][electrode][sample]
  std::vector<std::vector<std::vector<double>>> traces;
  /// Subjects contributing to each class.
  std::vector<std::size_t> subject_counts;
};

/// Bandpasses each trial (zero-phase, order 3) when a band is given, averages
/// trials per subject and class, then averages the subject means.
ErpAverage erp_grand_average(const TrialArchive& archive, const std::vector<std::string>& electrodes,
                             std::optional<std::pair<double, double>> band_hz);

nlohmann::json to_json(const ErpAverage& erp);

}  // namespace latalign
