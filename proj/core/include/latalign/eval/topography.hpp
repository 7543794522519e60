#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "latalign/eval/montage.hpp"

namespace latalign {

struct Topography {
  std::vector<std::string> channels;
  std::vector<double> relevance;      // mean |w| per electrode
  std::vector<std::size_t> ranking;   // channel indices, most relevant first
  std::vector<const Electrode*> positions;  // null when the montage lacks the channel
};

/// Mean absolute spatial weight per electrode, averaged over filter rows and
/// then over the given models (one matrix per checkpoint).
Topography topography(std::span<const Eigen::MatrixXd> spatial_weights,
                      const std::vector<std::string>& channels, const Montage& montage);

/// Mean relevance of `group` divided by the mean relevance of every other channel.
double relevance_ratio(const Topography& topo, const std::vector<std::string>& group);

nlohmann::json to_json(const Topography& topo, const std::string& montage_name);

}  // namespace latalign
