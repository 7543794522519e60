#include "latalign/eval/topography.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "latalign/error.hpp"
#include "latalign/log.hpp"

namespace latalign {

Topography topography(std::span<const Eigen::MatrixXd> weights, const std::vector<std::string>& channels,
                      const Montage& montage) {
  require(!weights.empty(), ErrorCode::InvalidArgument, "topography needs at least one model");
  const auto c = static_cast<Eigen::Index>(channels.size());
  Eigen::VectorXd rel = Eigen::VectorXd::Zero(c);
  for (const auto& w : weights) {
    require(w.cols() == c && w.rows() > 0, ErrorCode::ShapeMismatch, "spatial weights do not match the channel list");
    rel += w.cwiseAbs().colwise().mean().transpose();
  }
  rel /= static_cast<double>(weights.size());

  Topography t;
  t.channels = channels;
  t.relevance.assign(rel.data(), rel.data() + c);
  t.ranking.resize(channels.size());
  std::iota(t.ranking.begin(), t.ranking.end(), std::size_t{0});
  std::stable_sort(t.ranking.begin(), t.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return t.relevance[a] > t.relevance[b]; });
  std::size_t missing = 0;
  for (const auto& ch : channels) {
    t.positions.push_back(montage.find(ch));
    if (!t.positions.back()) ++missing;
  }
  if (missing) log_warning(std::to_string(missing) + " channel(s) have no position in montage " + montage.name);
  return t;
}

double relevance_ratio(const Topography& t, const std::vector<std::string>& group) {
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < t.channels.size(); ++i) {
    if (std::find(group.begin(), group.end(), t.channels[i]) != group.end()) {
      in += t.relevance[i];
      ++n_in;
    } else {
      out += t.relevance[i];
      ++n_out;
    }
  }
  require(n_in > 0, ErrorCode::UnknownElectrode, "none of the group electrodes are in the topography");
  if (n_out == 0 || out == 0.0) return std::numeric_limits<double>::infinity();
  return (in / static_cast<double>(n_in)) / (out / static_cast<double>(n_out));
}

nlohmann::json to_json(const Topography& t, const std::string& montage_name) {
  nlohmann::json electrodes = nlohmann::json::array();
  for (std::size_t i = 0; i < t.channels.size(); ++i) {
    nlohmann::json e = {{"name", t.channels[i]}, {"relevance", t.relevance[i]}};
    if (t.positions[i]) e["position"] = {t.positions[i]->x, t.positions[i]->y, t.positions[i]->z};
    else e["position"] = nullptr;
    electrodes.push_back(e);
  }
  nlohmann::json ranked = nlohmann::json::array();
  for (auto i : t.ranking) ranked.push_back(t.channels[i]);
  return {{"montage", montage_name}, {"electrodes", electrodes}, {"ranking", ranked}};
}

}  // namespace latalign
