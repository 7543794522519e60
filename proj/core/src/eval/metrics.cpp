#include "latalign/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "latalign/error.hpp"

namespace latalign {

double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions,
                         std::size_t n_classes) {
  require(labels.size() == predictions.size(), ErrorCode::ShapeMismatch,
          "labels and predictions differ in length");
  std::vector<double> hits(n_classes, 0.0), totals(n_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < n_classes, ErrorCode::InvalidArgument,
            "label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(n_classes) + ")");
    const auto c = static_cast<std::size_t>(labels[i]);
    totals[c] += 1.0;
    if (predictions[i] == labels[i]) hits[c] += 1.0;
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    require(totals[c] > 0.0, ErrorCode::MissingClass, "class " + std::to_string(c) + " has no samples");
    sum += hits[c] / totals[c];
  }
  return sum / static_cast<double>(n_classes);
}

double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions) {
  require(labels.size() == predictions.size(), ErrorCode::ShapeMismatch,
          "labels and predictions differ in length");
  require(!labels.empty(), ErrorCode::MissingClass, "no samples");
  const std::set<int> classes(labels.begin(), labels.end());
  double sum = 0.0;
  for (int c : classes) {
    double hit = 0.0, total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) {
        total += 1.0;
        hit += predictions[i] == c ? 1.0 : 0.0;
      }
    sum += hit / total;
  }
  return sum / static_cast<double>(classes.size());
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.10) return "†";
  return "";
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "paired samples differ in length");
  require(a.size() >= 2, ErrorCode::InvalidArgument, "paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  r.df = n - 1;
  r.mean_difference = mean;
  const double scale = std::max({std::abs(mean), 1e-300});
  if (sd <= 1e-14 * scale || sd == 0.0) {
    const bool all_zero = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? INFINITY : -INFINITY;
      r.p = 0.0;
      r.degenerate_perfect_shift = true;
    }
    r.stars = significance_stars(r.p);
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.stars = significance_stars(r.p);
  return r;
}

}  // namespace latalign
